// dsdkit command line: noise cleaning, synthetic data, inference, metrics,
// benchmarking and the self-verification suite.
//
// Exit codes: 0 success, 1 failed verification, 2 usage or input errors.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "dsdkit/bench.hpp"
#include "dsdkit/errors.hpp"
#include "dsdkit/metrics.hpp"
#include "dsdkit/model.hpp"
#include "dsdkit/selfcheck.hpp"
#include "dsdkit/synth.hpp"
#include "dsdkit/table_io.hpp"
#include "dsdkit/trcl.hpp"

namespace {

using nlohmann::json;

std::uint64_t resolve_seed(std::uint64_t cli_seed, bool seed_given) {
    if (seed_given) return cli_seed;
    if (const char* env = std::getenv("DSDKIT_SEED")) {
        return std::strtoull(env, nullptr, 10);
    }
    return 0;
}

void write_text(const std::string& path, const std::string& text) {
    if (path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw dsdkit::ParseError("cannot open for writing: " + path);
    os << text;
}

std::string read_text(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw dsdkit::ParseError("cannot open: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void apply_threads(int threads) {
#ifdef _OPENMP
    omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

int run_clean(const std::string& input, const std::string& report_path,
              const std::string& cleaned_path, const std::string& truth_path,
              const dsdkit::trcl::CleaningConfig& cfg) {
    const dsdkit::trcl::PredictionTable table =
        dsdkit::harness::load_predictions_csv(input);
    const dsdkit::trcl::NoiseReport report = dsdkit::trcl::trcl_pipeline(table, cfg);
    if (!report_path.empty()) {
        write_text(report_path, dsdkit::harness::noise_report_to_json(report));
    }
    if (!cleaned_path.empty()) {
        dsdkit::trcl::PredictionTable cleaned = table;
        std::map<std::int64_t, int> relabel;
        for (const auto& f : report.flagged) relabel[f.sample_id] = f.suggested_label;
        for (auto& row : cleaned.rows) {
            auto it = relabel.find(row.sample_id);
            if (it != relabel.end()) row.noisy_label = it->second;
        }
        write_text(cleaned_path, dsdkit::harness::predictions_to_csv(cleaned));
    }
    std::cerr << "flagged " << report.flagged.size() << " of " << table.size()
              << " samples\n";
    if (!truth_path.empty()) {
        const auto truth = dsdkit::harness::load_truth_noise_set(truth_path);
        const auto m = dsdkit::trcl::cleaning_metrics(report, truth);
        json j;
        j["total_noise"] = m.total_noise;
        j["flagged"] = m.flagged_count;
        j["correct"] = m.correct_count;
        j["remaining"] = m.remaining;
        j["noise_pct"] = m.noise_pct;
        if (m.nca_pct) j["nca_pct"] = *m.nca_pct;
        std::cout << j.dump(2) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DSDFormer kernels and TRCL label-noise cleaning"};
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    bool seed_given = false;
    int threads = 1;
    app.add_option("--seed", seed, "global RNG seed (env DSDKIT_SEED as fallback)")
        ->each([&](const std::string&) { seed_given = true; });
    app.add_option("--threads", threads, "OpenMP thread count (default 1)");

    // clean ----------------------------------------------------------------
    auto* clean = app.add_subcommand("clean", "flag noisy labels in a CSV table");
    std::string clean_input, clean_report, clean_out, clean_truth;
    double alpha = 0.1;
    int strategy = 4, iterations = 1;
    std::string mode = "intersection";
    std::vector<int> protected_classes;
    clean->add_option("input", clean_input, "predictions CSV")->required();
    clean->add_option("--report", clean_report, "noise report JSON path");
    clean->add_option("--cleaned", clean_out, "relabeled CSV path");
    clean->add_option("--truth", clean_truth, "truth CSV: prints Noise/NCA");
    clean->add_option("--alpha", alpha, "temporal boost factor (default 0.1)");
    clean->add_option("--strategy", strategy, "identification strategy 1-4 (default 4)")
        ->check(CLI::Range(1, 4));
    clean->add_option("--mode", mode, "strategy-4 combine: intersection|union")
        ->check(CLI::IsMember({"intersection", "union"}));
    clean->add_option("--iterations", iterations, "refinement rounds (default 1)")
        ->check(CLI::PositiveNumber);
    clean->add_option("--protected", protected_classes,
                      "class indices never flagged");

    // synth ----------------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "generate a noisy video dataset");
    dsdkit::harness::SynthConfig scfg;
    std::string synth_out = "predictions.csv", synth_truth = "truth.csv";
    synth->add_option("--out", synth_out, "predictions CSV path");
    synth->add_option("--truth", synth_truth, "ground-truth CSV path");
    synth->add_option("--videos", scfg.num_videos, "video count");
    synth->add_option("--frames", scfg.frames_per_video, "frames per video");
    synth->add_option("--classes", scfg.num_classes, "class count");
    synth->add_option("--noise-rate", scfg.noise_rate, "fraction of noisy frames");
    synth->add_option("--burst-min", scfg.burst_min, "min burst length");
    synth->add_option("--burst-max", scfg.burst_max, "max burst length");
    synth->add_option("--sharpness", scfg.teacher_sharpness, "teacher confidence");
    synth->add_option("--protected", scfg.protected_class,
                      "class kept noise-free (-1 none)");
    bool iid = false;
    synth->add_flag("--iid", iid, "per-frame noise instead of bursts");

    // forward ----------------------------------------------------------------
    auto* forward = app.add_subcommand("forward", "run the model on one image");
    std::string fwd_config, fwd_weights, fwd_image, fwd_out = "-", fwd_dump;
    forward->add_option("--config", fwd_config, "model config JSON")->required();
    forward->add_option("--weights", fwd_weights,
                        "weights directory (seeded init when omitted)");
    forward->add_option("--image", fwd_image, "input DSD1 tensor [H,W,3]")
        ->required();
    forward->add_option("--output", fwd_out, "probabilities JSON ('-' = stdout)");
    forward->add_option("--dump-weights", fwd_dump,
                        "also write the (possibly seeded) weights here");

    // metrics ----------------------------------------------------------------
    auto* metrics_cmd = app.add_subcommand("metrics", "classification metrics");
    std::string metrics_input, metrics_out = "-";
    int metrics_classes = 0;
    metrics_cmd->add_option("input", metrics_input, "CSV with header pred,label")
        ->required();
    metrics_cmd->add_option("--classes", metrics_classes,
                            "class count (default: max seen + 1)");
    metrics_cmd->add_option("--output", metrics_out, "metrics JSON");

    // bench ----------------------------------------------------------------
    auto* bench = app.add_subcommand("bench", "scan vs attention complexity");
    dsdkit::harness::BenchConfig bcfg;
    std::string bench_out = "-", bench_mode = "complexity";
    bench->add_option("--lengths", bcfg.lengths, "sequence lengths");
    bench->add_option("--repeats", bcfg.repeats, "timing repeats (>= 5)");
    bench->add_option("--channels", bcfg.channels, "channel width");
    bench->add_option("--state", bcfg.state_size, "scan state size N");
    bench->add_option("--output", bench_out, "report JSON");
    bench->add_option("--mode", bench_mode, "complexity|kernels")
        ->check(CLI::IsMember({"complexity", "kernels"}));

    // verify ----------------------------------------------------------------
    auto* verify = app.add_subcommand("verify", "run the full invariant suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    apply_threads(threads);
    const std::uint64_t effective_seed = resolve_seed(seed, seed_given);

    try {
        if (clean->parsed()) {
            dsdkit::trcl::CleaningConfig cfg;
            cfg.strategy = static_cast<dsdkit::trcl::Strategy>(strategy);
            cfg.combine_mode = mode == "union"
                                   ? dsdkit::trcl::CombineMode::kUnion
                                   : dsdkit::trcl::CombineMode::kIntersection;
            cfg.alpha = alpha;
            cfg.iterations = iterations;
            cfg.protected_classes.insert(protected_classes.begin(),
                                         protected_classes.end());
            return run_clean(clean_input, clean_report, clean_out, clean_truth, cfg);
        }

        if (synth->parsed()) {
            scfg.seed = effective_seed;
            scfg.iid_noise = iid;
            const auto ds = dsdkit::harness::synth_dataset(scfg);
            dsdkit::harness::save_predictions_csv(ds.table, synth_out);
            dsdkit::harness::save_truth_csv(ds, synth_truth);
            std::int64_t noisy = 0;
            for (bool b : ds.noise_mask) noisy += b;
            std::cerr << "wrote " << ds.table.size() << " rows (" << noisy
                      << " noisy) to " << synth_out << "\n";
            return 0;
        }

        if (forward->parsed()) {
            const auto cfg = dsdkit::model::config_from_json(read_text(fwd_config));
            dsdkit::model::ModelWeights weights =
                fwd_weights.empty()
                    ? dsdkit::model::init_weights(cfg, effective_seed)
                    : dsdkit::model::load_weights(cfg, fwd_weights);
            if (!fwd_dump.empty()) dsdkit::model::save_weights(weights, fwd_dump);
            const dsdkit::Tensor image = dsdkit::load_tensor(fwd_image);
            const std::vector<float> probs =
                dsdkit::model::forward(image, cfg, weights);
            json j;
            j["probs"] = probs;
            int best = 0;
            for (int c = 1; c < static_cast<int>(probs.size()); ++c) {
                if (probs[static_cast<std::size_t>(c)] >
                    probs[static_cast<std::size_t>(best)]) {
                    best = c;
                }
            }
            j["argmax"] = best;
            write_text(fwd_out, j.dump(2) + "\n");
            return 0;
        }

        if (metrics_cmd->parsed()) {
            const std::string text = read_text(metrics_input);
            std::istringstream is(text);
            std::string line;
            if (!std::getline(is, line) ||
                (line != "pred,label" && line != "pred,label\r")) {
                throw dsdkit::ParseError(metrics_input + ":1: expected header pred,label");
            }
            std::vector<int> preds, labels;
            int line_no = 1;
            while (std::getline(is, line)) {
                ++line_no;
                if (!line.empty() && line.back() == '\r') line.pop_back();
                if (line.empty()) continue;
                const auto comma = line.find(',');
                if (comma == std::string::npos) {
                    throw dsdkit::ParseError(metrics_input + ":" +
                                             std::to_string(line_no) + ": bad row");
                }
                preds.push_back(std::stoi(line.substr(0, comma)));
                labels.push_back(std::stoi(line.substr(comma + 1)));
            }
            int m = metrics_classes;
            if (m <= 0) {
                for (std::size_t i = 0; i < preds.size(); ++i) {
                    m = std::max({m, preds[i] + 1, labels[i] + 1});
                }
            }
            const auto r = dsdkit::metrics::evaluate(preds, labels, m);
            json j;
            j["per_class"] = json::array();
            for (const auto& pc : r.per_class) {
                json c;
                if (pc.precision) c["pre"] = *pc.precision;
                if (pc.recall) c["rec"] = *pc.recall;
                if (pc.f1) c["f1"] = *pc.f1;
                j["per_class"].push_back(c);
            }
            j["macro"]["acc"] = r.accuracy;
            if (r.macro_precision) j["macro"]["pre"] = *r.macro_precision;
            if (r.macro_recall) j["macro"]["rec"] = *r.macro_recall;
            if (r.macro_f1) j["macro"]["f1"] = *r.macro_f1;
            write_text(metrics_out, j.dump(2) + "\n");
            return 0;
        }

        if (bench->parsed()) {
            if (bench_mode == "kernels") {
                const auto points = dsdkit::harness::bench_kernels_serial_vs_parallel(
                    threads > 1 ? threads : 2, effective_seed);
                write_text(bench_out,
                           dsdkit::harness::kernel_compare_to_json(
                               points, threads > 1 ? threads : 2));
                return 0;
            }
            bcfg.seed = effective_seed;
            const auto report = dsdkit::harness::bench_scan_vs_attention(bcfg);
            write_text(bench_out, dsdkit::harness::bench_report_to_json(report));
            return 0;
        }

        if (verify->parsed()) {
            const auto results = dsdkit::selfcheck::run_all();
            bool all = true;
            for (const auto& r : results) {
                std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << ": "
                          << r.detail << "\n";
                all = all && r.pass;
            }
            return all ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
