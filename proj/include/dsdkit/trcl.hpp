#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

// Confident Learning with a temporal-reasoning refinement pass. Works on
// teacher probabilities over video frames: class thresholds, confusion
// counts, the normalized joint distribution, four identification strategies,
// neighbor probability boosting, and the end-to-end cleaning pipeline.
namespace dsdkit::trcl {

struct PredictionRow {
    std::int64_t sample_id = 0;
    std::int64_t video_id = 0;
    std::int64_t frame_idx = 0;
    int noisy_label = 0;
    std::vector<double> probs;  // length num_classes, sums to 1 +- 1e-4
};

struct PredictionTable {
    int num_classes = 0;
    std::vector<PredictionRow> rows;

    std::int64_t size() const { return static_cast<std::int64_t>(rows.size()); }
};

// Checks labels, row stochasticity (1e-4 tolerance), per-video strictly
// increasing frame_idx and sample_id uniqueness. Throws ParseError naming the
// offending row.
void validate_table(const PredictionTable& table);

enum class Strategy {
    kOffDiagonal = 1,       // members of off-diagonal confusion cells
    kLowSelfConfidence = 2, // lowest p_i among samples labeled i, count from Q
    kLargestMargin = 3,     // highest p_j - p_i per ordered pair, count from Q
    kHybrid = 4,            // combination of 2 and 3
};

enum class CombineMode { kIntersection, kUnion };

struct CleaningConfig {
    Strategy strategy = Strategy::kHybrid;
    CombineMode combine_mode = CombineMode::kIntersection;  // strategy 4 only
    double alpha = 0.1;
    int iterations = 1;
    std::set<int> protected_classes;  // never flagged
};

struct FlaggedSample {
    std::int64_t sample_id = 0;
    int noisy_label = 0;
    int suggested_label = 0;
    double margin = 0.0;  // p_suggested - p_noisy at identification time

    bool operator==(const FlaggedSample&) const = default;
};

struct NoiseReport {
    std::vector<FlaggedSample> flagged;  // sorted by sample_id
    std::vector<double> thresholds;
    std::vector<std::vector<std::int64_t>> confusion;
    std::vector<std::vector<double>> joint;
    CleaningConfig config;
    std::vector<std::int64_t> iteration_sizes;  // flagged count per identification pass
};

// t_j = mean of p_j over samples labeled j. Throws ThresholdError naming any
// class with no samples.
std::vector<double> compute_thresholds(const PredictionTable& table);

// C[i][j] = #{v labeled i : argmax_k p_k(v) = j (ties to lowest j) and
// p_j(v) >= t_j}. Samples whose argmax class misses its threshold count
// nowhere.
std::vector<std::vector<std::int64_t>> build_confusion(
    const PredictionTable& table, const std::vector<double>& thresholds);

// Row-normalize C, scale row i by |V_i|, divide by the global sum. All-zero
// rows contribute nothing (0/0 -> 0). Throws ConfigError if C is entirely
// zero.
std::vector<std::vector<double>> joint_distribution(
    const std::vector<std::vector<std::int64_t>>& confusion,
    const PredictionTable& table);

// Applies the configured strategy; rows whose noisy label is protected are
// never candidates. Deterministic: ties break by sample_id, selection counts
// round half-away-from-zero and cap at class size. Result sorted by
// sample_id.
std::vector<FlaggedSample> identify_noise(
    const PredictionTable& table, const std::vector<double>& thresholds,
    const std::vector<std::vector<std::int64_t>>& confusion,
    const std::vector<std::vector<double>>& joint, const CleaningConfig& cfg);

// For each flagged frame with suggested class j, multiplies p_j of the
// previous/next frame of the same video by (1 + alpha), clipped at 1.0. Rows
// are not renormalized. alpha = 0 returns the table unchanged.
PredictionTable temporal_adjust(const PredictionTable& table,
                                const std::vector<FlaggedSample>& flagged,
                                double alpha);

// identify -> adjust -> re-identify, repeated cfg.iterations times. The
// report carries the final thresholds/confusion/joint and the flagged-count
// trail.
NoiseReport trcl_pipeline(const PredictionTable& table,
                          const CleaningConfig& cfg);

struct CleaningMetrics {
    double noise_pct = 0.0;               // remaining / total * 100 (0 if no noise)
    std::optional<double> nca_pct;        // correct / flagged * 100 (absent if none flagged)
    std::int64_t remaining = 0;
    std::int64_t total_noise = 0;
    std::int64_t flagged_count = 0;
    std::int64_t correct_count = 0;
};

CleaningMetrics cleaning_metrics(const NoiseReport& report,
                                 const std::set<std::int64_t>& truth_noise);

}  // namespace dsdkit::trcl
