#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Wall-clock comparison of the linear-time selective scan against full
// attention (kv stride 1) over growing sequence lengths, plus a serial vs
// OpenMP kernel comparison. Timing is median-of-repeats after warmup, single
// logical thread for the complexity runs.
namespace dsdkit::harness {

struct BenchPoint {
    std::string op;        // "scan" or "attention"
    int length = 0;        // HW
    double median_ms = 0.0;
    double min_ms = 0.0;
    double flops_est = 0.0;  // multiply count of the dominant term
};

struct BenchReport {
    std::vector<BenchPoint> points;
    std::vector<double> scan_ratios;  // consecutive time ratios
    std::vector<double> attn_ratios;
    double scan_exponent = 0.0;  // log-log regression slope
    double attn_exponent = 0.0;
    int repeats = 0;
    int channels = 0;
    int state_size = 0;
};

struct BenchConfig {
    std::vector<int> lengths = {256, 512, 1024};
    int repeats = 9;
    int warmup = 2;
    int channels = 8;      // d for both ops
    int state_size = 16;   // N for the scan
    std::uint64_t seed = 0;
    double min_sample_ms = 2.0;  // batch tiny ops until one sample costs this
};

// Requires ascending lengths (>= 2 of them) and repeats >= 5.
BenchReport bench_scan_vs_attention(const BenchConfig& cfg);

std::string bench_report_to_json(const BenchReport& report);

struct KernelComparePoint {
    std::string kernel;
    double serial_ms = 0.0;
    double parallel_ms = 0.0;
    bool bit_identical = false;
};

// Times the serial reference kernels against the OpenMP ones on identical
// inputs and checks the outputs match bit-for-bit.
std::vector<KernelComparePoint> bench_kernels_serial_vs_parallel(
    int threads, std::uint64_t seed = 0);

std::string kernel_compare_to_json(const std::vector<KernelComparePoint>& points,
                                   int threads);

}  // namespace dsdkit::harness
