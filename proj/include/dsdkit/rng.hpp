#pragma once

#include <cstdint>
#include <random>

namespace dsdkit {

// All randomness in the project flows through this wrapper. The raw engine is
// std::mt19937_64, but floats are derived from the bit stream directly instead
// of going through std::uniform_real_distribution, whose output is
// implementation-defined; this keeps seeded runs byte-identical across
// standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    float uniform_f(float lo, float hi) {
        return static_cast<float>(uniform(lo, hi));
    }

    // Integer in [0, n), n > 0. Modulo bias is irrelevant at the ranges used
    // here (n << 2^64).
    std::int64_t below(std::int64_t n) {
        return static_cast<std::int64_t>(engine_() % static_cast<std::uint64_t>(n));
    }

    std::int64_t range(std::int64_t lo, std::int64_t hi_inclusive) {
        return lo + below(hi_inclusive - lo + 1);
    }

    // Standard normal via Box-Muller on the deterministic uniform stream.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace dsdkit
