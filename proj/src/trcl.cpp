#include "dsdkit/trcl.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "dsdkit/errors.hpp"

namespace dsdkit::trcl {

namespace {

// argmax with ties broken to the lowest class index.
int argmax_class(const std::vector<double>& probs) {
    int best = 0;
    for (int j = 1; j < static_cast<int>(probs.size()); ++j) {
        if (probs[static_cast<std::size_t>(j)] > probs[static_cast<std::size_t>(best)]) {
            best = j;
        }
    }
    return best;
}

std::vector<std::vector<std::int64_t>> class_members(const PredictionTable& table) {
    std::vector<std::vector<std::int64_t>> members(
        static_cast<std::size_t>(table.num_classes));
    for (std::int64_t r = 0; r < table.size(); ++r) {
        members[static_cast<std::size_t>(table.rows[static_cast<std::size_t>(r)].noisy_label)]
            .push_back(r);
    }
    return members;
}

std::int64_t round_half_away(double x) {
    return static_cast<std::int64_t>(std::llround(x));
}

}  // namespace

void validate_table(const PredictionTable& table) {
    const int m = table.num_classes;
    if (m < 2) throw ParseError("table: num_classes must be >= 2");
    std::set<std::int64_t> seen_ids;
    std::map<std::int64_t, std::int64_t> last_frame;  // video -> frame_idx
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const PredictionRow& row = table.rows[r];
        const std::string where = "row " + std::to_string(r);
        if (row.noisy_label < 0 || row.noisy_label >= m) {
            throw ParseError(where + ": label " + std::to_string(row.noisy_label) +
                             " outside [0, " + std::to_string(m) + ")");
        }
        if (static_cast<int>(row.probs.size()) != m) {
            throw ParseError(where + ": expected " + std::to_string(m) +
                             " probabilities");
        }
        double sum = 0.0;
        for (double p : row.probs) {
            if (!(p >= 0.0) || !std::isfinite(p)) {
                throw ParseError(where + ": negative or non-finite probability");
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-4) {
            throw ParseError(where + ": probabilities sum to " +
                             std::to_string(sum) + " (> 1e-4 off)");
        }
        if (!seen_ids.insert(row.sample_id).second) {
            throw ParseError(where + ": duplicate sample_id " +
                             std::to_string(row.sample_id));
        }
        auto it = last_frame.find(row.video_id);
        if (it != last_frame.end() && row.frame_idx <= it->second) {
            throw ParseError(where + ": frame_idx " + std::to_string(row.frame_idx) +
                             " not strictly increasing within video " +
                             std::to_string(row.video_id));
        }
        last_frame[row.video_id] = row.frame_idx;
    }
}

std::vector<double> compute_thresholds(const PredictionTable& table) {
    const int m = table.num_classes;
    std::vector<double> sum(static_cast<std::size_t>(m), 0.0);
    std::vector<std::int64_t> count(static_cast<std::size_t>(m), 0);
    for (const PredictionRow& row : table.rows) {
        const std::size_t j = static_cast<std::size_t>(row.noisy_label);
        sum[j] += row.probs[j];
        ++count[j];
    }
    std::vector<double> t(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        if (count[static_cast<std::size_t>(j)] == 0) {
            throw ThresholdError("threshold undefined: class " + std::to_string(j) +
                                 " has no samples");
        }
        t[static_cast<std::size_t>(j)] =
            sum[static_cast<std::size_t>(j)] /
            static_cast<double>(count[static_cast<std::size_t>(j)]);
    }
    return t;
}

std::vector<std::vector<std::int64_t>> build_confusion(
    const PredictionTable& table, const std::vector<double>& thresholds) {
    const int m = table.num_classes;
    if (static_cast<int>(thresholds.size()) != m) {
        throw DimensionError("build_confusion: thresholds length != num_classes");
    }
    std::vector<std::vector<std::int64_t>> c(
        static_cast<std::size_t>(m),
        std::vector<std::int64_t>(static_cast<std::size_t>(m), 0));
    for (const PredictionRow& row : table.rows) {
        const int j = argmax_class(row.probs);
        if (row.probs[static_cast<std::size_t>(j)] >=
            thresholds[static_cast<std::size_t>(j)]) {
            ++c[static_cast<std::size_t>(row.noisy_label)][static_cast<std::size_t>(j)];
        }
    }
    return c;
}

std::vector<std::vector<double>> joint_distribution(
    const std::vector<std::vector<std::int64_t>>& confusion,
    const PredictionTable& table) {
    const int m = table.num_classes;
    if (static_cast<int>(confusion.size()) != m) {
        throw DimensionError("joint_distribution: confusion size != num_classes");
    }
    std::vector<std::int64_t> class_size(static_cast<std::size_t>(m), 0);
    for (const PredictionRow& row : table.rows) {
        ++class_size[static_cast<std::size_t>(row.noisy_label)];
    }

    std::vector<std::int64_t> row_sum(static_cast<std::size_t>(m), 0);
    std::int64_t grand = 0;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            row_sum[static_cast<std::size_t>(i)] +=
                confusion[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
        grand += row_sum[static_cast<std::size_t>(i)];
    }
    if (grand == 0) {
        throw ConfigError("joint_distribution: confusion matrix is entirely zero");
    }

    // After row normalization, row i contributes exactly |V_i| to the global
    // mass, so the denominator is the integer sum over nonzero rows.
    std::int64_t denom = 0;
    for (int i = 0; i < m; ++i) {
        if (row_sum[static_cast<std::size_t>(i)] > 0) {
            denom += class_size[static_cast<std::size_t>(i)];
        }
    }

    std::vector<std::vector<double>> q(
        static_cast<std::size_t>(m),
        std::vector<double>(static_cast<std::size_t>(m), 0.0));
    for (int i = 0; i < m; ++i) {
        if (row_sum[static_cast<std::size_t>(i)] == 0) continue;  // 0/0 -> 0
        for (int j = 0; j < m; ++j) {
            const std::int64_t cij =
                confusion[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            // (C_ij / S_i * |V_i|) / denom with integer products to minimize
            // rounding.
            q[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                static_cast<double>(cij * class_size[static_cast<std::size_t>(i)]) /
                (static_cast<double>(row_sum[static_cast<std::size_t>(i)]) *
                 static_cast<double>(denom));
        }
    }
    return q;
}

namespace {

// Strategy 1: membership in off-diagonal confusion cells.
std::vector<FlaggedSample> strategy_off_diagonal(const PredictionTable& table,
                                                 const std::vector<double>& t,
                                                 const std::set<int>& protect) {
    std::vector<FlaggedSample> out;
    for (const PredictionRow& row : table.rows) {
        if (protect.count(row.noisy_label)) continue;
        const int j = argmax_class(row.probs);
        if (j == row.noisy_label) continue;
        if (row.probs[static_cast<std::size_t>(j)] < t[static_cast<std::size_t>(j)]) {
            continue;
        }
        out.push_back({row.sample_id, row.noisy_label, j,
                       row.probs[static_cast<std::size_t>(j)] -
                           row.probs[static_cast<std::size_t>(row.noisy_label)]});
    }
    return out;
}

int suggest_other_argmax(const PredictionRow& row) {
    int best = -1;
    for (int j = 0; j < static_cast<int>(row.probs.size()); ++j) {
        if (j == row.noisy_label) continue;
        if (best < 0 || row.probs[static_cast<std::size_t>(j)] >
                            row.probs[static_cast<std::size_t>(best)]) {
            best = j;
        }
    }
    return best;
}

// Strategy 2: per class i, the round(n * sum_{j != i} Q[i][j]) members with
// the lowest self-probability.
std::vector<FlaggedSample> strategy_low_confidence(
    const PredictionTable& table, const std::vector<std::vector<double>>& q,
    const std::set<int>& protect) {
    const int m = table.num_classes;
    const double n = static_cast<double>(table.size());
    const auto members = class_members(table);
    std::vector<FlaggedSample> out;
    for (int i = 0; i < m; ++i) {
        if (protect.count(i)) continue;
        double off = 0.0;
        for (int j = 0; j < m; ++j) {
            if (j != i) off += q[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
        std::int64_t want = round_half_away(n * off);
        const auto& mem = members[static_cast<std::size_t>(i)];
        want = std::min<std::int64_t>(want, static_cast<std::int64_t>(mem.size()));
        if (want <= 0) continue;

        std::vector<std::int64_t> order = mem;
        std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
            const double pa = table.rows[static_cast<std::size_t>(a)]
                                  .probs[static_cast<std::size_t>(i)];
            const double pb = table.rows[static_cast<std::size_t>(b)]
                                  .probs[static_cast<std::size_t>(i)];
            if (pa != pb) return pa < pb;
            return table.rows[static_cast<std::size_t>(a)].sample_id <
                   table.rows[static_cast<std::size_t>(b)].sample_id;
        });
        for (std::int64_t k = 0; k < want; ++k) {
            const PredictionRow& row =
                table.rows[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
            const int j = suggest_other_argmax(row);
            out.push_back({row.sample_id, row.noisy_label, j,
                           row.probs[static_cast<std::size_t>(j)] -
                               row.probs[static_cast<std::size_t>(i)]});
        }
    }
    return out;
}

// Strategy 3: per ordered pair (i, j), the round(n * Q[i][j]) members of
// class i with the highest margin p_j - p_i. A sample picked by several
// pairs keeps the pair with the largest margin (ties to the lowest j).
std::vector<FlaggedSample> strategy_largest_margin(
    const PredictionTable& table, const std::vector<std::vector<double>>& q,
    const std::set<int>& protect) {
    const int m = table.num_classes;
    const double n = static_cast<double>(table.size());
    const auto members = class_members(table);

    std::unordered_map<std::int64_t, FlaggedSample> best;  // sample_id -> pick
    for (int i = 0; i < m; ++i) {
        if (protect.count(i)) continue;
        const auto& mem = members[static_cast<std::size_t>(i)];
        for (int j = 0; j < m; ++j) {
            if (j == i) continue;
            std::int64_t want =
                round_half_away(n * q[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
            want = std::min<std::int64_t>(want, static_cast<std::int64_t>(mem.size()));
            if (want <= 0) continue;

            std::vector<std::int64_t> order = mem;
            std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
                const auto& ra = table.rows[static_cast<std::size_t>(a)];
                const auto& rb = table.rows[static_cast<std::size_t>(b)];
                const double ma = ra.probs[static_cast<std::size_t>(j)] -
                                  ra.probs[static_cast<std::size_t>(i)];
                const double mb = rb.probs[static_cast<std::size_t>(j)] -
                                  rb.probs[static_cast<std::size_t>(i)];
                if (ma != mb) return ma > mb;
                return ra.sample_id < rb.sample_id;
            });
            for (std::int64_t k = 0; k < want; ++k) {
                const PredictionRow& row =
                    table.rows[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
                const double margin = row.probs[static_cast<std::size_t>(j)] -
                                      row.probs[static_cast<std::size_t>(i)];
                FlaggedSample cand{row.sample_id, i, j, margin};
                auto it = best.find(row.sample_id);
                if (it == best.end() || margin > it->second.margin ||
                    (margin == it->second.margin && j < it->second.suggested_label)) {
                    best[row.sample_id] = cand;
                }
            }
        }
    }
    std::vector<FlaggedSample> out;
    out.reserve(best.size());
    for (const auto& kv : best) out.push_back(kv.second);
    return out;
}

void sort_by_sample(std::vector<FlaggedSample>& v) {
    std::sort(v.begin(), v.end(), [](const FlaggedSample& a, const FlaggedSample& b) {
        return a.sample_id < b.sample_id;
    });
}

}  // namespace

std::vector<FlaggedSample> identify_noise(
    const PredictionTable& table, const std::vector<double>& thresholds,
    const std::vector<std::vector<std::int64_t>>& confusion,
    const std::vector<std::vector<double>>& joint, const CleaningConfig& cfg) {
    (void)confusion;  // strategies 2-4 work off Q; strategy 1 re-derives its cells
    std::vector<FlaggedSample> out;
    switch (cfg.strategy) {
        case Strategy::kOffDiagonal:
            out = strategy_off_diagonal(table, thresholds, cfg.protected_classes);
            break;
        case Strategy::kLowSelfConfidence:
            out = strategy_low_confidence(table, joint, cfg.protected_classes);
            break;
        case Strategy::kLargestMargin:
            out = strategy_largest_margin(table, joint, cfg.protected_classes);
            break;
        case Strategy::kHybrid: {
            auto s2 = strategy_low_confidence(table, joint, cfg.protected_classes);
            auto s3 = strategy_largest_margin(table, joint, cfg.protected_classes);
            std::set<std::int64_t> ids3;
            for (const auto& f : s3) ids3.insert(f.sample_id);
            if (cfg.combine_mode == CombineMode::kIntersection) {
                for (const auto& f : s2) {
                    if (ids3.count(f.sample_id)) out.push_back(f);
                }
            } else {
                std::set<std::int64_t> ids2;
                for (const auto& f : s2) {
                    ids2.insert(f.sample_id);
                    out.push_back(f);  // union keeps strategy-2 suggestions first
                }
                for (const auto& f : s3) {
                    if (!ids2.count(f.sample_id)) out.push_back(f);
                }
            }
            break;
        }
    }
    sort_by_sample(out);
    return out;
}

PredictionTable temporal_adjust(const PredictionTable& table,
                                const std::vector<FlaggedSample>& flagged,
                                double alpha) {
    if (alpha < 0.0) throw ConfigError("temporal_adjust: alpha must be >= 0");
    PredictionTable out = table;
    if (alpha == 0.0 || flagged.empty()) return out;

    std::unordered_map<std::int64_t, std::size_t> row_of;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        row_of[table.rows[r].sample_id] = r;
    }
    // Per-video frame chains in table order (frame_idx is strictly increasing
    // within a video, so table order is temporal order).
    std::map<std::int64_t, std::vector<std::size_t>> video_rows;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        video_rows[table.rows[r].video_id].push_back(r);
    }
    std::unordered_map<std::int64_t, std::size_t> pos_in_video;
    for (const auto& kv : video_rows) {
        for (std::size_t p = 0; p < kv.second.size(); ++p) {
            pos_in_video[table.rows[kv.second[p]].sample_id] = p;
        }
    }

    std::vector<FlaggedSample> ordered = flagged;
    std::sort(ordered.begin(), ordered.end(),
              [](const FlaggedSample& a, const FlaggedSample& b) {
                  return a.sample_id < b.sample_id;
              });

    auto boost = [&](std::size_t row_idx, int cls) {
        double& p = out.rows[row_idx].probs[static_cast<std::size_t>(cls)];
        p = std::min(1.0, p * (1.0 + alpha));
    };

    for (const FlaggedSample& f : ordered) {
        auto rit = row_of.find(f.sample_id);
        if (rit == row_of.end()) continue;
        const std::size_t r = rit->second;
        const auto& chain = video_rows[table.rows[r].video_id];
        const std::size_t p = pos_in_video[f.sample_id];
        if (p > 0) boost(chain[p - 1], f.suggested_label);
        if (p + 1 < chain.size()) boost(chain[p + 1], f.suggested_label);
    }
    return out;
}

NoiseReport trcl_pipeline(const PredictionTable& table,
                          const CleaningConfig& cfg) {
    validate_table(table);
    if (cfg.iterations < 1) throw ConfigError("trcl: iterations must be >= 1");
    if (cfg.alpha < 0.0) throw ConfigError("trcl: alpha must be >= 0");

    NoiseReport report;
    report.config = cfg;

    PredictionTable work = table;
    std::vector<double> t = compute_thresholds(work);
    auto c = build_confusion(work, t);
    auto q = joint_distribution(c, work);
    std::vector<FlaggedSample> flagged = identify_noise(work, t, c, q, cfg);
    report.iteration_sizes.push_back(static_cast<std::int64_t>(flagged.size()));

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        work = temporal_adjust(work, flagged, cfg.alpha);
        t = compute_thresholds(work);
        c = build_confusion(work, t);
        q = joint_distribution(c, work);
        flagged = identify_noise(work, t, c, q, cfg);
        report.iteration_sizes.push_back(static_cast<std::int64_t>(flagged.size()));
    }

    report.flagged = std::move(flagged);
    report.thresholds = std::move(t);
    report.confusion = std::move(c);
    report.joint = std::move(q);
    return report;
}

CleaningMetrics cleaning_metrics(const NoiseReport& report,
                                 const std::set<std::int64_t>& truth_noise) {
    CleaningMetrics m;
    m.total_noise = static_cast<std::int64_t>(truth_noise.size());
    m.flagged_count = static_cast<std::int64_t>(report.flagged.size());
    for (const FlaggedSample& f : report.flagged) {
        if (truth_noise.count(f.sample_id)) ++m.correct_count;
    }
    m.remaining = m.total_noise - m.correct_count;
    m.noise_pct = m.total_noise > 0
                      ? 100.0 * static_cast<double>(m.remaining) /
                            static_cast<double>(m.total_noise)
                      : 0.0;
    if (m.flagged_count > 0) {
        m.nca_pct = 100.0 * static_cast<double>(m.correct_count) /
                    static_cast<double>(m.flagged_count);
    }
    return m;
}

}  // namespace dsdkit::trcl
