#pragma once

#include <cstdint>
#include <optional>
#include <vector>

// Classification metrics (one-vs-rest precision/recall/F1 plus accuracy, all
// as percentages) and relative error reduction. Multi-class aggregation is an
// unweighted macro average over classes where the metric is defined.
namespace dsdkit::metrics {

struct OutcomeCounts {
    std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;

    std::int64_t total() const { return tp + fp + tn + fn; }
};

// One-vs-rest counts for class c. Throws DimensionError on length mismatch.
OutcomeCounts outcome_counts(const std::vector<int>& preds,
                             const std::vector<int>& labels, int c);

struct ClassMetrics {
    std::optional<double> precision;  // absent on 0/0
    std::optional<double> recall;
    std::optional<double> f1;
};

ClassMetrics class_metrics(const OutcomeCounts& counts);

struct MetricsReport {
    std::vector<ClassMetrics> per_class;
    std::optional<double> macro_precision;
    std::optional<double> macro_recall;
    std::optional<double> macro_f1;
    double accuracy = 0.0;
};

MetricsReport evaluate(const std::vector<int>& preds,
                       const std::vector<int>& labels, int num_classes);

// (err_old - err_new) / err_old * 100; absent when err_old == 0.
std::optional<double> relative_error_reduction(double err_old_pct,
                                               double err_new_pct);

}  // namespace dsdkit::metrics
