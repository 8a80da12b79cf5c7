#include "dsdkit/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "dsdkit/bench.hpp"
#include "dsdkit/metrics.hpp"
#include "dsdkit/model.hpp"
#include "dsdkit/rng.hpp"
#include "dsdkit/ssm.hpp"
#include "dsdkit/synth.hpp"
#include "dsdkit/table_io.hpp"
#include "dsdkit/tensor.hpp"
#include "dsdkit/trcl.hpp"

namespace dsdkit::selfcheck {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

Tensor random_tensor(std::vector<int> shape, Rng& rng, float lo = -1.0f,
                     float hi = 1.0f) {
    Tensor t(std::move(shape));
    for (float& v : t.data) v = rng.uniform_f(lo, hi);
    return t;
}

ssm::SsmParams random_ssm_params(int d, int n, Rng& rng) {
    ssm::SsmParams p;
    p.log_a = random_tensor({n}, rng, -1.5f, 0.5f);
    p.b_proj = random_tensor({d, n}, rng, -0.5f, 0.5f);
    p.c_proj = random_tensor({d, n}, rng, -0.5f, 0.5f);
    p.delta_w = random_tensor({d}, rng, -0.5f, 0.5f);
    p.delta_b = random_tensor({1}, rng, -1.0f, 1.0f);
    p.d_skip = random_tensor({d}, rng, -1.0f, 1.0f);
    return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// 1. Scan oracle
// ---------------------------------------------------------------------------

CheckResult check_scan_oracle() {
    int failures = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        Rng rng(1000 + static_cast<std::uint64_t>(trial));
        const int len = 1 + static_cast<int>(rng.below(64));
        const int n = 1 + static_cast<int>(rng.below(16));
        const int d = 1 + static_cast<int>(rng.below(8));
        Tensor x = random_tensor({len, d}, rng);
        ssm::SsmParams params = random_ssm_params(d, n, rng);

        Tensor y = ssm::selective_scan(x, params);

        // Recompute the per-token parameters here with double accumulation,
        // then drive the literal recurrence, channel by channel.
        const std::vector<float> a = params.a_diag();
        for (int ch = 0; ch < d; ++ch) {
            ssm::ScanSteps steps;
            steps.len = len;
            steps.state = n;
            steps.a_bar.resize(static_cast<std::size_t>(len) * n);
            steps.b_bar.resize(static_cast<std::size_t>(len) * n);
            steps.c.resize(static_cast<std::size_t>(len) * n);
            steps.d.assign(static_cast<std::size_t>(len), params.d_skip.at(ch));
            std::vector<float> x_ch(static_cast<std::size_t>(len));
            for (int t = 0; t < len; ++t) {
                x_ch[static_cast<std::size_t>(t)] = x.at(t, ch);
                double dacc = params.delta_b.at(0);
                for (int j = 0; j < d; ++j) {
                    dacc += static_cast<double>(x.at(t, j)) * params.delta_w.at(j);
                }
                const float delta =
                    dacc > 20.0 ? static_cast<float>(dacc)
                                : static_cast<float>(std::log1p(std::exp(dacc)));
                for (int i = 0; i < n; ++i) {
                    double bi = 0.0, ci = 0.0;
                    for (int j = 0; j < d; ++j) {
                        bi += static_cast<double>(x.at(t, j)) * params.b_proj.at(j, i);
                        ci += static_cast<double>(x.at(t, j)) * params.c_proj.at(j, i);
                    }
                    const std::size_t idx = static_cast<std::size_t>(t) * n +
                                            static_cast<std::size_t>(i);
                    steps.a_bar[idx] =
                        std::exp(delta * a[static_cast<std::size_t>(i)]);
                    steps.b_bar[idx] = delta * static_cast<float>(bi);
                    steps.c[idx] = static_cast<float>(ci);
                }
            }
            const std::vector<float> want = ssm::ssm_recurrence_oracle(x_ch, steps);
            for (int t = 0; t < len; ++t) {
                const double got = y.at(t, ch);
                const double ref = want[static_cast<std::size_t>(t)];
                const double err =
                    std::abs(got - ref) / std::max(1.0, std::abs(ref));
                worst = std::max(worst, err);
                if (err > 1e-5) ++failures;
            }
        }
    }
    return {"scan_oracle",
            failures == 0,
            "100 configs (L<=64, N<=16, d<=8), worst rel err " + fmt(worst) +
                (failures ? ", " + std::to_string(failures) + " mismatches" : "")};
}

// ---------------------------------------------------------------------------
// 2. Complexity benchmark
// ---------------------------------------------------------------------------

CheckResult check_complexity() {
    harness::BenchConfig cfg;
    cfg.lengths = {256, 512, 1024};
    harness::BenchReport report = harness::bench_scan_vs_attention(cfg);

    bool pass = true;
    std::ostringstream os;
    os << "scan ratios";
    for (double r : report.scan_ratios) {
        os << " " << fmt(r);
        pass = pass && r >= 1.6 && r <= 2.6;
    }
    os << ", attn ratios";
    for (double r : report.attn_ratios) {
        os << " " << fmt(r);
        pass = pass && r >= 3.2 && r <= 5.2;
    }
    os << ", exponents " << fmt(report.scan_exponent) << "/"
       << fmt(report.attn_exponent);
    pass = pass && std::abs(report.scan_exponent - 1.0) <= 0.35;
    pass = pass && std::abs(report.attn_exponent - 2.0) <= 0.35;
    return {"complexity", pass, os.str()};
}

// ---------------------------------------------------------------------------
// 3. CL exactness against brute force
// ---------------------------------------------------------------------------

namespace {

// A random but always-valid prediction table: every class populated, frames
// strictly increasing per video, rows exactly stochastic.
trcl::PredictionTable random_table(std::uint64_t seed, int max_n = 200,
                                   int max_m = 6) {
    Rng rng(seed);
    const int m = 2 + static_cast<int>(rng.below(max_m - 1));
    const int n = m + static_cast<int>(rng.below(max_n - m + 1));
    const int videos = 1 + static_cast<int>(rng.below(5));
    trcl::PredictionTable table;
    table.num_classes = m;
    std::vector<std::int64_t> next_frame(static_cast<std::size_t>(videos), 0);
    for (int r = 0; r < n; ++r) {
        trcl::PredictionRow row;
        row.sample_id = r;
        row.video_id = rng.below(videos);
        row.frame_idx = next_frame[static_cast<std::size_t>(row.video_id)]++;
        row.noisy_label = r < m ? r : static_cast<int>(rng.below(m));
        row.probs.resize(static_cast<std::size_t>(m));
        double sum = 0.0;
        for (int c = 0; c < m; ++c) {
            row.probs[static_cast<std::size_t>(c)] = -std::log(1.0 - rng.uniform());
            sum += row.probs[static_cast<std::size_t>(c)];
        }
        for (double& p : row.probs) p /= sum;
        table.rows.push_back(std::move(row));
    }
    return table;
}

using IdLabel = std::pair<std::int64_t, int>;

std::set<IdLabel> to_pairs(const std::vector<trcl::FlaggedSample>& v) {
    std::set<IdLabel> s;
    for (const auto& f : v) s.insert({f.sample_id, f.suggested_label});
    return s;
}

// Exhaustive re-implementation of the four strategies, straight from the
// definitions: O(n^2) repeated extraction instead of sorting, explicit set
// algebra for the hybrid.
struct BruteForce {
    const trcl::PredictionTable& table;
    const std::vector<double>& t;
    const std::vector<std::vector<double>>& q;
    const std::set<int>& protect;

    int argmax(const std::vector<double>& p) const {
        int best = 0;
        for (int j = 1; j < static_cast<int>(p.size()); ++j) {
            if (p[static_cast<std::size_t>(j)] > p[static_cast<std::size_t>(best)])
                best = j;
        }
        return best;
    }

    std::set<IdLabel> s1() const {
        std::set<IdLabel> out;
        for (const auto& row : table.rows) {
            if (protect.count(row.noisy_label)) continue;
            const int j = argmax(row.probs);
            if (j != row.noisy_label &&
                row.probs[static_cast<std::size_t>(j)] >= t[static_cast<std::size_t>(j)]) {
                out.insert({row.sample_id, j});
            }
        }
        return out;
    }

    std::set<IdLabel> s2() const {
        const int m = table.num_classes;
        const double n = static_cast<double>(table.size());
        std::set<IdLabel> out;
        for (int i = 0; i < m; ++i) {
            if (protect.count(i)) continue;
            double off = 0.0;
            for (int j = 0; j < m; ++j) {
                if (j != i) off += q[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            }
            std::int64_t want = std::llround(n * off);
            std::vector<const trcl::PredictionRow*> pool;
            for (const auto& row : table.rows) {
                if (row.noisy_label == i) pool.push_back(&row);
            }
            want = std::min<std::int64_t>(want,
                                          static_cast<std::int64_t>(pool.size()));
            std::set<std::int64_t> taken;
            for (std::int64_t k = 0; k < want; ++k) {
                const trcl::PredictionRow* best = nullptr;
                for (const auto* row : pool) {
                    if (taken.count(row->sample_id)) continue;
                    if (!best ||
                        row->probs[static_cast<std::size_t>(i)] <
                            best->probs[static_cast<std::size_t>(i)] ||
                        (row->probs[static_cast<std::size_t>(i)] ==
                             best->probs[static_cast<std::size_t>(i)] &&
                         row->sample_id < best->sample_id)) {
                        best = row;
                    }
                }
                taken.insert(best->sample_id);
                int sug = -1;
                for (int j = 0; j < m; ++j) {
                    if (j == i) continue;
                    if (sug < 0 || best->probs[static_cast<std::size_t>(j)] >
                                       best->probs[static_cast<std::size_t>(sug)]) {
                        sug = j;
                    }
                }
                out.insert({best->sample_id, sug});
            }
        }
        return out;
    }

    std::set<IdLabel> s3() const {
        const int m = table.num_classes;
        const double n = static_cast<double>(table.size());
        // sample -> (margin, suggested j); the largest margin wins, ties to
        // the lowest class index.
        std::map<std::int64_t, std::pair<double, int>> best;
        for (int i = 0; i < m; ++i) {
            if (protect.count(i)) continue;
            std::vector<const trcl::PredictionRow*> pool;
            for (const auto& row : table.rows) {
                if (row.noisy_label == i) pool.push_back(&row);
            }
            for (int j = 0; j < m; ++j) {
                if (j == i) continue;
                std::int64_t want = std::llround(
                    n * q[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
                want = std::min<std::int64_t>(
                    want, static_cast<std::int64_t>(pool.size()));
                std::set<std::int64_t> taken;
                for (std::int64_t k = 0; k < want; ++k) {
                    const trcl::PredictionRow* pick = nullptr;
                    double pick_margin = 0.0;
                    for (const auto* row : pool) {
                        if (taken.count(row->sample_id)) continue;
                        const double margin =
                            row->probs[static_cast<std::size_t>(j)] -
                            row->probs[static_cast<std::size_t>(i)];
                        if (!pick || margin > pick_margin ||
                            (margin == pick_margin &&
                             row->sample_id < pick->sample_id)) {
                            pick = row;
                            pick_margin = margin;
                        }
                    }
                    taken.insert(pick->sample_id);
                    auto it = best.find(pick->sample_id);
                    if (it == best.end() || pick_margin > it->second.first ||
                        (pick_margin == it->second.first && j < it->second.second)) {
                        best[pick->sample_id] = {pick_margin, j};
                    }
                }
            }
        }
        std::set<IdLabel> out;
        for (const auto& kv : best) out.insert({kv.first, kv.second.second});
        return out;
    }

    std::set<IdLabel> s4(bool intersection) const {
        const std::set<IdLabel> a = s2();
        const std::set<IdLabel> b = s3();
        std::set<std::int64_t> ids_a, ids_b;
        for (const auto& p : a) ids_a.insert(p.first);
        for (const auto& p : b) ids_b.insert(p.first);
        std::set<IdLabel> out;
        if (intersection) {
            for (const auto& p : a) {
                if (ids_b.count(p.first)) out.insert(p);  // suggestion from S2
            }
        } else {
            out = a;
            for (const auto& p : b) {
                if (!ids_a.count(p.first)) out.insert(p);
            }
        }
        return out;
    }
};

}  // namespace

CheckResult check_cl_exactness() {
    int tables_checked = 0;
    double worst_sum = 0.0, worst_marginal = 0.0;
    std::string fail;

    for (std::uint64_t seed = 0; seed < 200 && tables_checked < 50; ++seed) {
        trcl::PredictionTable table = random_table(2000 + seed);
        trcl::validate_table(table);
        const std::vector<double> t = trcl::compute_thresholds(table);
        const auto c = trcl::build_confusion(table, t);
        std::vector<std::vector<double>> q;
        try {
            q = trcl::joint_distribution(c, table);
        } catch (const ConfigError&) {
            continue;  // degenerate confusion matrix, try another table
        }
        ++tables_checked;

        const int m = table.num_classes;
        double total = 0.0;
        for (const auto& row : q) {
            for (double v : row) total += v;
        }
        worst_sum = std::max(worst_sum, std::abs(total - 1.0));
        if (std::abs(total - 1.0) > 1e-9) {
            fail = "sum(Q) off by " + fmt(total - 1.0);
            break;
        }

        bool all_rows_nonzero = true;
        std::vector<std::int64_t> class_size(static_cast<std::size_t>(m), 0);
        for (const auto& row : table.rows) {
            ++class_size[static_cast<std::size_t>(row.noisy_label)];
        }
        for (int i = 0; i < m; ++i) {
            std::int64_t s = 0;
            for (int j = 0; j < m; ++j) {
                s += c[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            }
            if (s == 0) all_rows_nonzero = false;
        }
        if (all_rows_nonzero) {
            for (int i = 0; i < m; ++i) {
                double row_sum = 0.0;
                for (int j = 0; j < m; ++j) {
                    row_sum += q[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                }
                const double want = static_cast<double>(
                                        class_size[static_cast<std::size_t>(i)]) /
                                    static_cast<double>(table.size());
                worst_marginal = std::max(worst_marginal, std::abs(row_sum - want));
                if (std::abs(row_sum - want) > 1e-12) {
                    fail = "Q row marginal off by " + fmt(row_sum - want);
                }
            }
            if (!fail.empty()) break;
        }

        // Strategy sets vs brute force, with and without a protected class.
        for (int protect_first = 0; protect_first < 2; ++protect_first) {
            trcl::CleaningConfig cfg;
            if (protect_first) cfg.protected_classes.insert(0);
            BruteForce bf{table, t, q, cfg.protected_classes};
            for (int strat = 1; strat <= 4; ++strat) {
                cfg.strategy = static_cast<trcl::Strategy>(strat);
                for (int mode = 0; mode < (strat == 4 ? 2 : 1); ++mode) {
                    cfg.combine_mode = mode == 0 ? trcl::CombineMode::kIntersection
                                                 : trcl::CombineMode::kUnion;
                    const auto got =
                        to_pairs(trcl::identify_noise(table, t, c, q, cfg));
                    std::set<IdLabel> want;
                    switch (strat) {
                        case 1: want = bf.s1(); break;
                        case 2: want = bf.s2(); break;
                        case 3: want = bf.s3(); break;
                        case 4: want = bf.s4(mode == 0); break;
                    }
                    if (got != want) {
                        fail = "strategy " + std::to_string(strat) +
                               (strat == 4 ? (mode == 0 ? " (intersection)" : " (union)")
                                           : "") +
                               " mismatch on table seed " + std::to_string(seed) +
                               ": got " + std::to_string(got.size()) + ", want " +
                               std::to_string(want.size());
                    }
                }
            }
        }
        if (!fail.empty()) break;
    }

    const bool pass = fail.empty() && tables_checked >= 50;
    std::string detail = std::to_string(tables_checked) +
                         " tables, worst |sum(Q)-1| " + fmt(worst_sum) +
                         ", worst marginal dev " + fmt(worst_marginal);
    if (!fail.empty()) detail += "; FAIL: " + fail;
    return {"cl_exactness", pass, detail};
}

// ---------------------------------------------------------------------------
// 4. alpha = 0 reduces TRCL to plain CL
// ---------------------------------------------------------------------------

CheckResult check_alpha_zero_reduction() {
    int checked = 0;
    std::string fail;
    for (std::uint64_t seed = 0; seed < 10 && fail.empty(); ++seed) {
        harness::SynthConfig scfg;
        scfg.seed = seed;
        const harness::SynthDataset ds = harness::synth_dataset(scfg);
        for (int strat = 1; strat <= 4 && fail.empty(); ++strat) {
            trcl::CleaningConfig cfg;
            cfg.strategy = static_cast<trcl::Strategy>(strat);
            cfg.alpha = 0.0;
            trcl::NoiseReport report = trcl::trcl_pipeline(ds.table, cfg);

            const auto t = trcl::compute_thresholds(ds.table);
            const auto c = trcl::build_confusion(ds.table, t);
            const auto q = trcl::joint_distribution(c, ds.table);
            const auto plain = trcl::identify_noise(ds.table, t, c, q, cfg);

            if (!(report.flagged == plain)) {
                fail = "flagged sets differ at seed " + std::to_string(seed) +
                       " strategy " + std::to_string(strat);
            }
            ++checked;
        }
    }
    return {"alpha_zero_reduction", fail.empty(),
            fail.empty() ? std::to_string(checked) + " table/strategy combos identical"
                         : fail};
}

// ---------------------------------------------------------------------------
// 5. TRCL directional claim on burst noise
// ---------------------------------------------------------------------------

CheckResult check_trcl_directional() {
    int wins = 0;
    const int seeds = 20;
    std::ostringstream os;
    for (int seed = 0; seed < seeds; ++seed) {
        harness::SynthConfig scfg;
        scfg.seed = static_cast<std::uint64_t>(seed);
        const harness::SynthDataset ds = harness::synth_dataset(scfg);
        std::set<std::int64_t> truth;
        for (std::size_t i = 0; i < ds.noise_mask.size(); ++i) {
            if (ds.noise_mask[i]) truth.insert(ds.table.rows[i].sample_id);
        }

        trcl::CleaningConfig cl_cfg;
        cl_cfg.alpha = 0.0;
        trcl::CleaningConfig trcl_cfg;
        trcl_cfg.alpha = 0.1;

        const auto cl = trcl::cleaning_metrics(trcl::trcl_pipeline(ds.table, cl_cfg), truth);
        const auto tr = trcl::cleaning_metrics(trcl::trcl_pipeline(ds.table, trcl_cfg), truth);

        const bool nca_ok = tr.nca_pct && cl.nca_pct && *tr.nca_pct >= *cl.nca_pct;
        const bool rem_ok = tr.remaining <= cl.remaining;
        if (nca_ok && rem_ok) ++wins;
        if (seed == 0) {
            os << "seed0 CL nca/rem " << fmt(cl.nca_pct.value_or(-1)) << "/"
               << cl.remaining << ", TRCL " << fmt(tr.nca_pct.value_or(-1)) << "/"
               << tr.remaining << "; ";
        }
    }
    os << wins << "/" << seeds << " seeds with NCA >= and remaining <=";
    return {"trcl_directional", wins >= 18, os.str()};
}

// ---------------------------------------------------------------------------
// 6. alpha ablation sweep
// ---------------------------------------------------------------------------

CheckResult check_alpha_ablation() {
    harness::SynthConfig scfg;
    scfg.seed = 0;
    const harness::SynthDataset ds = harness::synth_dataset(scfg);
    std::set<std::int64_t> truth;
    for (std::size_t i = 0; i < ds.noise_mask.size(); ++i) {
        if (ds.noise_mask[i]) truth.insert(ds.table.rows[i].sample_id);
    }

    const double alphas[] = {0.05, 0.1, 0.15, 0.2};
    std::ostringstream os;
    os << "precision(recall) by alpha:";
    int emitted = 0;
    bool deterministic = true;
    for (double alpha : alphas) {
        trcl::CleaningConfig cfg;
        cfg.alpha = alpha;
        trcl::NoiseReport a = trcl::trcl_pipeline(ds.table, cfg);
        trcl::NoiseReport b = trcl::trcl_pipeline(ds.table, cfg);
        deterministic = deterministic && a.flagged == b.flagged;
        const auto m = trcl::cleaning_metrics(a, truth);
        const double recall =
            m.total_noise > 0 ? 100.0 * static_cast<double>(m.correct_count) /
                                    static_cast<double>(m.total_noise)
                              : 0.0;
        os << " " << fmt(alpha) << "->" << fmt(m.nca_pct.value_or(-1.0)) << "("
           << fmt(recall) << ")";
        ++emitted;
    }
    return {"alpha_ablation", emitted == 4 && deterministic,
            os.str() + (deterministic ? "" : " (nondeterministic!)")};
}

// ---------------------------------------------------------------------------
// 7. Block / forward integrity
// ---------------------------------------------------------------------------

CheckResult check_forward_integrity() {
    std::string fail;
    const model::ModelConfig cfg = model::toy_config();
    const model::ModelWeights weights = model::init_weights(cfg, 7);

    Rng rng(42);
    Tensor image = random_tensor({cfg.input_h, cfg.input_w, 3}, rng, 0.0f, 1.0f);

    const std::vector<float> p1 = model::forward(image, cfg, weights);
    const std::vector<float> p2 = model::forward(image, cfg, weights);
    if (p1 != p2) fail = "forward not deterministic";
    if (static_cast<int>(p1.size()) != cfg.num_classes) fail = "bad output length";
    double sum = 0.0;
    for (float v : p1) sum += v;
    if (std::abs(sum - 1.0) > 1e-6) fail = "probabilities sum to " + fmt(sum);

    // Stage boundary shapes.
    Tensor t = model::stem(image, weights.stem);
    if (t.shape != std::vector<int>{cfg.input_h / 2, cfg.input_w / 2,
                                    cfg.stages[0].width}) {
        fail = "stem output shape " + t.shape_str();
    }
    for (int s = 0; s < 4 && fail.empty(); ++s) {
        const auto& sp = weights.stages[static_cast<std::size_t>(s)];
        t = nn::apply_gelu(nn::conv2d(t, sp.entry, cfg.stage_downsample, 1));
        for (const auto& blk : sp.blocks) t = model::dsdformer_block(t, blk);
        const std::vector<int> want{model::stage_h(cfg, s), model::stage_w(cfg, s),
                                    cfg.stages[static_cast<std::size_t>(s)].width};
        if (t.shape != want) {
            fail = "stage " + std::to_string(s + 1) + " shape " + t.shape_str();
        }
    }

    // SCEM residual identity with zeroed branch weights.
    if (fail.empty()) {
        model::ScemParams zeroed = weights.stages[0].blocks[0].scem;
        for (Tensor* w : {&zeroed.conv1.w, &zeroed.conv1.b, &zeroed.dw.w,
                          &zeroed.dw.b, &zeroed.se.fc1, &zeroed.se.fc2,
                          &zeroed.conv2.w, &zeroed.conv2.b}) {
            for (float& v : w->data) v = 0.0f;
        }
        Rng rng2(43);
        Tensor x = random_tensor({8, 8, cfg.stages[0].width}, rng2);
        Tensor y = model::scem(x, zeroed);
        if (!(y.shape == x.shape && y.data == x.data)) {
            fail = "zero-weight SCEM is not the identity";
        }
    }

    // count_params == enumeration.
    std::int64_t enumerated = 0;
    model::for_each_tensor(weights, [&](const std::string&, const Tensor& w) {
        enumerated += w.numel();
    });
    const std::int64_t formula = model::count_params(cfg);
    if (formula != enumerated) {
        fail = "count_params " + std::to_string(formula) + " != enumerated " +
               std::to_string(enumerated);
    }

    return {"forward_integrity", fail.empty(),
            fail.empty() ? "toy forward deterministic, " +
                               std::to_string(formula) + " params, sum(p)=" + fmt(sum)
                         : fail};
}

// ---------------------------------------------------------------------------
// 8. Metrics oracle
// ---------------------------------------------------------------------------

CheckResult check_metrics_oracle() {
    std::string fail;
    for (int trial = 0; trial < 1000 && fail.empty(); ++trial) {
        Rng rng(5000 + static_cast<std::uint64_t>(trial));
        const int m = 2 + static_cast<int>(rng.below(5));
        const int n = 1 + static_cast<int>(rng.below(50));
        std::vector<int> preds(static_cast<std::size_t>(n)),
            labels(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            preds[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(m));
            labels[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(m));
        }
        const metrics::MetricsReport got = metrics::evaluate(preds, labels, m);

        // Brute force: count every (sample, class) pair explicitly.
        std::int64_t correct = 0;
        for (int i = 0; i < n; ++i) {
            if (preds[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(i)])
                ++correct;
        }
        const double acc = 100.0 * static_cast<double>(correct) / n;
        if (acc != got.accuracy) {
            fail = "accuracy mismatch";
            break;
        }
        for (int c = 0; c < m; ++c) {
            std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
            for (int i = 0; i < n; ++i) {
                const bool pp = preds[static_cast<std::size_t>(i)] == c;
                const bool tt = labels[static_cast<std::size_t>(i)] == c;
                tp += pp && tt;
                fp += pp && !tt;
                fn += !pp && tt;
                tn += !pp && !tt;
            }
            if (tp + fp + tn + fn != n) {
                fail = "counts do not partition";
                break;
            }
            const auto& pc = got.per_class[static_cast<std::size_t>(c)];
            if (tp + fp > 0) {
                if (!pc.precision || *pc.precision != 100.0 * tp / static_cast<double>(tp + fp)) {
                    fail = "precision mismatch";
                }
            } else if (pc.precision) {
                fail = "precision should be absent";
            }
            if (tp + fn > 0) {
                if (!pc.recall || *pc.recall != 100.0 * tp / static_cast<double>(tp + fn)) {
                    fail = "recall mismatch";
                }
            } else if (pc.recall) {
                fail = "recall should be absent";
            }
        }
    }

    const auto rer = metrics::relative_error_reduction(1.43, 0.98);
    if (fail.empty()) {
        if (!rer) {
            fail = "relative error reduction absent";
        } else if (std::abs(*rer - 31.37) > 0.15) {
            fail = "relative error reduction " + fmt(*rer) + " not within 0.15 of 31.37";
        }
    }
    return {"metrics_oracle", fail.empty(),
            fail.empty() ? "1000 cases exact; RER(1.43,0.98)=" + fmt(*rer) : fail};
}

// ---------------------------------------------------------------------------
// 9. Format round trips
// ---------------------------------------------------------------------------

CheckResult check_format_roundtrips() {
    std::string fail;
    const fs::path dir = fs::temp_directory_path() / "dsdkit-selfcheck";
    fs::create_directories(dir);

    // CSV
    harness::SynthConfig scfg;
    scfg.seed = 3;
    const harness::SynthDataset ds = harness::synth_dataset(scfg);
    const std::string csv1 = harness::predictions_to_csv(ds.table);
    const trcl::PredictionTable reparsed = harness::predictions_from_csv(csv1);
    const std::string csv2 = harness::predictions_to_csv(reparsed);
    if (csv1 != csv2) fail = "CSV round trip not byte-identical";

    // NoiseReport JSON
    if (fail.empty()) {
        trcl::CleaningConfig ccfg;
        const trcl::NoiseReport report = trcl::trcl_pipeline(ds.table, ccfg);
        const std::string j1 = harness::noise_report_to_json(report);
        const std::string j2 =
            harness::noise_report_to_json(harness::noise_report_from_json(j1));
        if (j1 != j2) fail = "NoiseReport JSON round trip not byte-identical";
    }

    // Tensor files rank 1..4
    if (fail.empty()) {
        Rng rng(17);
        const std::vector<std::vector<int>> shapes = {
            {7}, {3, 5}, {2, 3, 4}, {2, 3, 4, 5}};
        for (const auto& shape : shapes) {
            Tensor t = random_tensor(shape, rng);
            const std::string path = (dir / "roundtrip.dsd").string();
            save_tensor(t, path);
            Tensor back = load_tensor(path);
            if (!(back.shape == t.shape && back.data == t.data)) {
                fail = "tensor round trip failed at rank " +
                       std::to_string(shape.size());
                break;
            }
        }
    }
    return {"format_roundtrips", fail.empty(),
            fail.empty() ? "CSV, report JSON and rank 1-4 tensors stable" : fail};
}

// ---------------------------------------------------------------------------
// Extra invariants
// ---------------------------------------------------------------------------

CheckResult check_permutations() {
    std::string fail;
    for (int h = 1; h <= 5 && fail.empty(); ++h) {
        for (int w = 1; w <= 5 && fail.empty(); ++w) {
            const auto dirs = ssm::multi_direction_flatten(h, w);
            for (int d = 0; d < 4; ++d) {
                std::vector<bool> seen(static_cast<std::size_t>(h * w), false);
                for (int s = 0; s < h * w; ++s) {
                    const int cell = dirs.order[static_cast<std::size_t>(d)][static_cast<std::size_t>(s)];
                    if (cell < 0 || cell >= h * w || seen[static_cast<std::size_t>(cell)]) {
                        fail = "order is not a permutation";
                        break;
                    }
                    seen[static_cast<std::size_t>(cell)] = true;
                    if (dirs.inverse[static_cast<std::size_t>(d)][static_cast<std::size_t>(cell)] != s) {
                        fail = "inverse map broken";
                        break;
                    }
                }
            }
            Rng rng(static_cast<std::uint64_t>(h * 100 + w));
            Tensor x = random_tensor({h, w, 3}, rng);
            for (int d = 0; d < 4; ++d) {
                const auto dir = static_cast<ssm::Direction>(d);
                Tensor back = ssm::scatter_direction(
                    ssm::gather_direction(x, dirs, dir), dirs, dir);
                if (back.data != x.data) {
                    fail = "flatten/unflatten round trip failed";
                    break;
                }
            }
        }
    }
    return {"permutations", fail.empty(),
            fail.empty() ? "all 4 directions bijective with exact round trips"
                         : fail};
}

CheckResult check_scan_stability() {
    Rng rng(11);
    const int len = 10000, d = 4, n = 8;
    Tensor x = random_tensor({len, d}, rng);
    ssm::SsmParams p = random_ssm_params(d, n, rng);
    Tensor y = ssm::selective_scan(x, p);
    for (float v : y.data) {
        if (!std::isfinite(v) || std::abs(v) > 1e6f) {
            return {"scan_stability", false, "unbounded output on length-1e4 scan"};
        }
    }
    return {"scan_stability", true, "length-1e4 scan bounded and finite"};
}

CheckResult check_kernel_parity() {
    const auto points = harness::bench_kernels_serial_vs_parallel(2);
    std::ostringstream os;
    bool pass = true;
    for (const auto& p : points) {
        pass = pass && p.bit_identical;
        os << p.kernel << (p.bit_identical ? " ok " : " MISMATCH ");
    }
    return {"kernel_parity", pass, os.str() + "(omp == serial bitwise)"};
}

std::vector<CheckResult> run_all() {
    return {
        check_scan_oracle(),       check_complexity(),
        check_cl_exactness(),      check_alpha_zero_reduction(),
        check_trcl_directional(),  check_alpha_ablation(),
        check_forward_integrity(), check_metrics_oracle(),
        check_format_roundtrips(), check_permutations(),
        check_scan_stability(),    check_kernel_parity(),
    };
}

}  // namespace dsdkit::selfcheck
