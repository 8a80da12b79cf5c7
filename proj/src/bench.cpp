#include "dsdkit/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <json.hpp>

#include "dsdkit/attention.hpp"
#include "dsdkit/errors.hpp"
#include "dsdkit/nn.hpp"
#include "dsdkit/rng.hpp"
#include "dsdkit/ssm.hpp"
#include "dsdkit/table_io.hpp"

namespace dsdkit::harness {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               Clock::now().time_since_epoch())
        .count();
}

Tensor random_tensor(std::vector<int> shape, Rng& rng, float lo = -1.0f,
                     float hi = 1.0f) {
    Tensor t(std::move(shape));
    for (float& v : t.data) v = rng.uniform_f(lo, hi);
    return t;
}

// Median wall time of one invocation. Cheap ops run in batches so each
// measured sample exceeds min_sample_ms.
double time_op(const std::function<void()>& op, int repeats, int warmup,
               double min_sample_ms, double* min_out = nullptr) {
    for (int i = 0; i < warmup; ++i) op();

    int batch = 1;
    for (;;) {
        const double t0 = now_ms();
        for (int i = 0; i < batch; ++i) op();
        const double elapsed = now_ms() - t0;
        if (elapsed >= min_sample_ms || batch >= (1 << 20)) break;
        batch *= 2;
    }

    std::vector<double> samples;
    samples.reserve(static_cast<std::size_t>(repeats));
    for (int r = 0; r < repeats; ++r) {
        const double t0 = now_ms();
        for (int i = 0; i < batch; ++i) op();
        samples.push_back((now_ms() - t0) / batch);
    }
    std::sort(samples.begin(), samples.end());
    if (min_out) *min_out = samples.front();
    return samples[samples.size() / 2];
}

// Near-square power-of-two-friendly factorization of L into H x W.
void factor_hw(int length, int& h, int& w) {
    h = static_cast<int>(std::sqrt(static_cast<double>(length)));
    while (h > 1 && length % h != 0) --h;
    w = length / h;
}

double fit_loglog_slope(const std::vector<int>& lengths,
                        const std::vector<double>& times) {
    const std::size_t n = lengths.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = std::log(static_cast<double>(lengths[i]));
        const double y = std::log(times[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double dn = static_cast<double>(n);
    return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

ssm::SsmParams make_scan_params(int d, int n, Rng& rng) {
    ssm::SsmParams p;
    p.log_a = random_tensor({n}, rng, -1.0f, 0.0f);
    p.b_proj = random_tensor({d, n}, rng, -0.3f, 0.3f);
    p.c_proj = random_tensor({d, n}, rng, -0.3f, 0.3f);
    p.delta_w = random_tensor({d}, rng, -0.3f, 0.3f);
    p.delta_b = random_tensor({1}, rng, -0.5f, 0.5f);
    p.d_skip = random_tensor({d}, rng, -1.0f, 1.0f);
    return p;
}

attn::LsaParams make_attention_params(int d, int hw, Rng& rng) {
    attn::LsaParams p;
    p.heads = 1;
    p.kv_stride = 1;
    auto lin = [&](nn::LinearParams& l) {
        l.w = random_tensor({d, d}, rng, -0.3f, 0.3f);
        l.b = random_tensor({d}, rng, -0.1f, 0.1f);
    };
    lin(p.q_proj);
    lin(p.k_proj);
    lin(p.v_proj);
    lin(p.out_proj);
    p.dw.w = Tensor({1, 1, d}, 1.0f);
    p.dw.b = Tensor({d}, 0.0f);
    p.bias = Tensor({1, hw, hw}, 0.0f);
    return p;
}

struct ScopedThreads {
    explicit ScopedThreads(int threads) {
#ifdef _OPENMP
        prev = omp_get_max_threads();
        omp_set_num_threads(threads);
#else
        (void)threads;
#endif
    }
    ~ScopedThreads() {
#ifdef _OPENMP
        omp_set_num_threads(prev);
#endif
    }
    int prev = 1;
};

}  // namespace

BenchReport bench_scan_vs_attention(const BenchConfig& cfg) {
    if (cfg.lengths.size() < 2) throw ConfigError("bench: need >= 2 lengths");
    for (std::size_t i = 1; i < cfg.lengths.size(); ++i) {
        if (cfg.lengths[i] <= cfg.lengths[i - 1]) {
            throw ConfigError("bench: lengths must be ascending");
        }
    }
    if (cfg.repeats < 5) throw ConfigError("bench: repeats must be >= 5");

    ScopedThreads single(1);  // complexity claim is about the algorithm, not cores
    Rng rng(cfg.seed);
    BenchReport report;
    report.repeats = cfg.repeats;
    report.channels = cfg.channels;
    report.state_size = cfg.state_size;

    struct Case {
        std::string op;
        int length = 0;
        std::function<void()> run;
        int batch = 1;
        std::vector<double> samples;
    };
    std::vector<Case> cases;

    std::vector<Tensor> seqs, maps;
    std::vector<ssm::SsmParams> sps;
    std::vector<attn::LsaParams> aps;
    seqs.reserve(cfg.lengths.size());
    maps.reserve(cfg.lengths.size());
    sps.reserve(cfg.lengths.size());
    aps.reserve(cfg.lengths.size());
    for (int length : cfg.lengths) {
        int h = 0, w = 0;
        factor_hw(length, h, w);
        seqs.push_back(random_tensor({length, cfg.channels}, rng));
        sps.push_back(make_scan_params(cfg.channels, cfg.state_size, rng));
        maps.push_back(random_tensor({h, w, cfg.channels}, rng));
        aps.push_back(make_attention_params(cfg.channels, length, rng));
        const Tensor& seq = seqs.back();
        const ssm::SsmParams& sp = sps.back();
        const Tensor& map = maps.back();
        const attn::LsaParams& ap = aps.back();
        cases.push_back({"scan", length, [&seq, &sp] { ssm::selective_scan(seq, sp); },
                         1, {}});
        cases.push_back({"attention", length, [&map, &ap] { attn::lsa(map, ap); },
                         1, {}});
    }

    // Calibrate batch sizes so one sample of every case costs at least
    // min_sample_ms, then interleave the timed rounds across cases. Machine
    // drift during the run hits every case alike that way, keeping the
    // point-to-point ratios honest.
    for (Case& c : cases) {
        for (int i = 0; i < cfg.warmup; ++i) c.run();
        for (;;) {
            const double t0 = now_ms();
            for (int i = 0; i < c.batch; ++i) c.run();
            if (now_ms() - t0 >= cfg.min_sample_ms || c.batch >= (1 << 20)) break;
            c.batch *= 2;
        }
    }
    for (int r = 0; r < cfg.repeats; ++r) {
        for (Case& c : cases) {
            const double t0 = now_ms();
            for (int i = 0; i < c.batch; ++i) c.run();
            c.samples.push_back((now_ms() - t0) / c.batch);
        }
    }

    std::vector<double> scan_times, attn_times;
    for (Case& c : cases) {
        std::sort(c.samples.begin(), c.samples.end());
        const double med = c.samples[c.samples.size() / 2];
        const double mn = c.samples.front();
        const double flops =
            c.op == "scan"
                ? static_cast<double>(c.length) * cfg.state_size * cfg.channels
                : static_cast<double>(c.length) * c.length * cfg.channels;
        report.points.push_back({c.op, c.length, med, mn, flops});
        // Ratios and exponents come from the per-case minimum, the repeat
        // least disturbed by scheduling noise.
        (c.op == "scan" ? scan_times : attn_times).push_back(mn);
    }

    for (std::size_t i = 1; i < cfg.lengths.size(); ++i) {
        report.scan_ratios.push_back(scan_times[i] / scan_times[i - 1]);
        report.attn_ratios.push_back(attn_times[i] / attn_times[i - 1]);
    }
    report.scan_exponent = fit_loglog_slope(cfg.lengths, scan_times);
    report.attn_exponent = fit_loglog_slope(cfg.lengths, attn_times);
    return report;
}

std::string bench_report_to_json(const BenchReport& report) {
    json j;
    j["repeats"] = report.repeats;
    j["channels"] = report.channels;
    j["state_size"] = report.state_size;
    j["points"] = json::array();
    for (const BenchPoint& p : report.points) {
        j["points"].push_back({{"op", p.op},
                               {"length", p.length},
                               {"median_ms", p.median_ms},
                               {"min_ms", p.min_ms},
                               {"flops_est", p.flops_est}});
    }
    j["scan_ratios"] = report.scan_ratios;
    j["attention_ratios"] = report.attn_ratios;
    j["scan_exponent"] = report.scan_exponent;
    j["attention_exponent"] = report.attn_exponent;
    j["expected_exponents"] = {{"scan", 1.0}, {"attention", 2.0}};
    return j.dump(2) + "\n";
}

std::vector<KernelComparePoint> bench_kernels_serial_vs_parallel(
    int threads, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<KernelComparePoint> out;

    auto compare = [&](const std::string& name, const std::function<Tensor()>& serial,
                       const std::function<Tensor()>& parallel) {
        KernelComparePoint p;
        p.kernel = name;
        Tensor a, b;
        {
            ScopedThreads s(1);
            p.serial_ms = time_op([&] { a = serial(); }, 5, 1, 2.0);
        }
        {
            ScopedThreads s(threads);
            p.parallel_ms = time_op([&] { b = parallel(); }, 5, 1, 2.0);
        }
        p.bit_identical = a.shape == b.shape && a.data == b.data;
        out.push_back(p);
    };

    {
        Tensor a = random_tensor({192, 192}, rng);
        Tensor b = random_tensor({192, 192}, rng);
        compare("matmul", [&] { return ref::matmul(a, b); },
                [&] { return nn::matmul(a, b); });
    }
    {
        Tensor x = random_tensor({64, 64, 16}, rng);
        nn::ConvParams cp;
        cp.w = random_tensor({3, 3, 16, 16}, rng, -0.2f, 0.2f);
        cp.b = random_tensor({16}, rng, -0.1f, 0.1f);
        compare("conv2d", [&] { return ref::conv2d(x, cp, 1, 1); },
                [&] { return nn::conv2d(x, cp, 1, 1); });
    }
    {
        Tensor x = random_tensor({128, 128, 16}, rng);
        nn::ConvParams cp;
        cp.w = random_tensor({3, 3, 16}, rng, -0.2f, 0.2f);
        cp.b = random_tensor({16}, rng, -0.1f, 0.1f);
        compare("depthwise_conv2d", [&] { return ref::depthwise_conv2d(x, cp, 1, 1); },
                [&] { return nn::depthwise_conv2d(x, cp, 1, 1); });
    }
    {
        Tensor x = random_tensor({1024, 32}, rng);
        ssm::SsmParams sp = make_scan_params(32, 16, rng);
        compare("selective_scan", [&] { return ssm::ref::selective_scan(x, sp); },
                [&] { return ssm::selective_scan(x, sp); });
    }
    return out;
}

std::string kernel_compare_to_json(const std::vector<KernelComparePoint>& points,
                                   int threads) {
    json j;
    j["threads"] = threads;
    j["kernels"] = json::array();
    for (const KernelComparePoint& p : points) {
        j["kernels"].push_back({{"kernel", p.kernel},
                                {"serial_ms", p.serial_ms},
                                {"parallel_ms", p.parallel_ms},
                                {"speedup", p.serial_ms / p.parallel_ms},
                                {"bit_identical", p.bit_identical}});
    }
    return j.dump(2) + "\n";
}

}  // namespace dsdkit::harness
