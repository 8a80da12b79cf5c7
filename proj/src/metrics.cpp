#include "dsdkit/metrics.hpp"

#include "dsdkit/errors.hpp"

namespace dsdkit::metrics {

OutcomeCounts outcome_counts(const std::vector<int>& preds,
                             const std::vector<int>& labels, int c) {
    if (preds.size() != labels.size()) {
        throw DimensionError("outcome_counts: preds/labels length mismatch");
    }
    OutcomeCounts o;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const bool pred_pos = preds[i] == c;
        const bool true_pos = labels[i] == c;
        if (pred_pos && true_pos) ++o.tp;
        else if (pred_pos && !true_pos) ++o.fp;
        else if (!pred_pos && true_pos) ++o.fn;
        else ++o.tn;
    }
    return o;
}

ClassMetrics class_metrics(const OutcomeCounts& c) {
    ClassMetrics m;
    if (c.tp + c.fp > 0) {
        m.precision = 100.0 * static_cast<double>(c.tp) /
                      static_cast<double>(c.tp + c.fp);
    }
    if (c.tp + c.fn > 0) {
        m.recall = 100.0 * static_cast<double>(c.tp) /
                   static_cast<double>(c.tp + c.fn);
    }
    if (m.precision && m.recall && (*m.precision + *m.recall) > 0.0) {
        m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
    }
    return m;
}

namespace {

std::optional<double> macro_of(const std::vector<ClassMetrics>& per_class,
                               std::optional<double> ClassMetrics::*field) {
    double sum = 0.0;
    int n = 0;
    for (const ClassMetrics& c : per_class) {
        if (c.*field) {
            sum += *(c.*field);
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return sum / n;
}

}  // namespace

MetricsReport evaluate(const std::vector<int>& preds,
                       const std::vector<int>& labels, int num_classes) {
    if (preds.size() != labels.size()) {
        throw DimensionError("evaluate: preds/labels length mismatch");
    }
    MetricsReport r;
    for (int c = 0; c < num_classes; ++c) {
        r.per_class.push_back(class_metrics(outcome_counts(preds, labels, c)));
    }
    r.macro_precision = macro_of(r.per_class, &ClassMetrics::precision);
    r.macro_recall = macro_of(r.per_class, &ClassMetrics::recall);
    r.macro_f1 = macro_of(r.per_class, &ClassMetrics::f1);

    std::int64_t correct = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] == labels[i]) ++correct;
    }
    r.accuracy = preds.empty() ? 0.0
                               : 100.0 * static_cast<double>(correct) /
                                     static_cast<double>(preds.size());
    return r;
}

std::optional<double> relative_error_reduction(double err_old_pct,
                                               double err_new_pct) {
    if (err_old_pct == 0.0) return std::nullopt;
    return (err_old_pct - err_new_pct) / err_old_pct * 100.0;
}

}  // namespace dsdkit::metrics
