#include "dsdkit/synth.hpp"

#include <algorithm>
#include <cmath>

#include "dsdkit/errors.hpp"
#include "dsdkit/rng.hpp"

namespace dsdkit::harness {

namespace {

// Softmax of kappa-boosted unit-normal logits. The true class gets the full
// boost; on noisy frames the annotated (wrong) class gets a partial one,
// making those frames ambiguous the way a teacher fit on noisy labels is.
std::vector<double> teacher_row(int num_classes, int true_class, int seen_label,
                                double kappa, double leak, Rng& rng) {
    std::vector<double> logits(static_cast<std::size_t>(num_classes));
    for (int c = 0; c < num_classes; ++c) {
        double boost = 0.0;
        if (c == true_class) boost += kappa;
        if (c == seen_label && seen_label != true_class) boost += leak * kappa;
        logits[static_cast<std::size_t>(c)] = rng.normal() + boost;
    }
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double sum = 0.0;
    std::vector<double> probs(logits.size());
    for (std::size_t c = 0; c < logits.size(); ++c) {
        probs[c] = std::exp(logits[c] - mx);
        sum += probs[c];
    }
    for (double& p : probs) p /= sum;
    return probs;
}

}  // namespace

SynthDataset synth_dataset(const SynthConfig& cfg) {
    if (cfg.num_videos < 1 || cfg.frames_per_video < 1) {
        throw ConfigError("synth: videos/frames must be positive");
    }
    if (cfg.num_classes < 2) throw ConfigError("synth: num_classes must be >= 2");
    if (!(cfg.noise_rate >= 0.0) || cfg.noise_rate >= 1.0) {
        throw ConfigError("synth: noise_rate must be in [0, 1)");
    }
    if (cfg.burst_min < 1 || cfg.burst_max < cfg.burst_min) {
        throw ConfigError("synth: bad burst length bounds");
    }
    if (!(cfg.teacher_sharpness > 0.0)) {
        throw ConfigError("synth: teacher_sharpness must be > 0");
    }
    if (cfg.label_leak < 0.0 || cfg.label_leak >= 1.0) {
        throw ConfigError("synth: label_leak must be in [0, 1)");
    }
    if (cfg.protected_class >= cfg.num_classes) {
        throw ConfigError("synth: protected_class out of range");
    }

    Rng rng(cfg.seed);
    const int n = cfg.num_videos * cfg.frames_per_video;

    // One true class per video.
    std::vector<int> video_class(static_cast<std::size_t>(cfg.num_videos));
    for (int v = 0; v < cfg.num_videos; ++v) {
        video_class[static_cast<std::size_t>(v)] =
            static_cast<int>(rng.below(cfg.num_classes));
    }

    // noisy[v][f] holds the flipped label, -1 where clean.
    std::vector<std::vector<int>> noisy(
        static_cast<std::size_t>(cfg.num_videos),
        std::vector<int>(static_cast<std::size_t>(cfg.frames_per_video), -1));

    std::vector<int> eligible;
    for (int v = 0; v < cfg.num_videos; ++v) {
        if (video_class[static_cast<std::size_t>(v)] != cfg.protected_class) {
            eligible.push_back(v);
        }
    }

    auto flip_target = [&](int true_class) {
        // A wrong class, never the protected one.
        int f;
        do {
            f = static_cast<int>(rng.below(cfg.num_classes));
        } while (f == true_class || f == cfg.protected_class);
        return f;
    };

    const std::int64_t target = std::llround(cfg.noise_rate * n);
    std::int64_t placed = 0;
    if (!eligible.empty() && target > 0) {
        if (cfg.iid_noise) {
            for (int v : eligible) {
                const int tc = video_class[static_cast<std::size_t>(v)];
                for (int f = 0; f < cfg.frames_per_video; ++f) {
                    if (rng.uniform() < cfg.noise_rate) {
                        noisy[static_cast<std::size_t>(v)][static_cast<std::size_t>(f)] =
                            flip_target(tc);
                        ++placed;
                    }
                }
            }
        } else {
            int attempts = 0;
            const int max_attempts = 64 * cfg.num_videos * cfg.frames_per_video /
                                         std::max(1, cfg.burst_min) +
                                     1024;
            while (placed < target && attempts < max_attempts) {
                ++attempts;
                const int v = eligible[static_cast<std::size_t>(
                    rng.below(static_cast<std::int64_t>(eligible.size())))];
                const int len = static_cast<int>(
                    rng.range(cfg.burst_min,
                              std::min<std::int64_t>(cfg.burst_max,
                                                     cfg.frames_per_video)));
                const int start =
                    static_cast<int>(rng.below(cfg.frames_per_video - len + 1));
                bool overlap = false;
                for (int f = start; f < start + len; ++f) {
                    if (noisy[static_cast<std::size_t>(v)][static_cast<std::size_t>(f)] >= 0) {
                        overlap = true;
                        break;
                    }
                }
                if (overlap) continue;
                const int wrong = flip_target(video_class[static_cast<std::size_t>(v)]);
                for (int f = start; f < start + len; ++f) {
                    noisy[static_cast<std::size_t>(v)][static_cast<std::size_t>(f)] = wrong;
                }
                placed += len;
            }
        }
    }

    SynthDataset ds;
    ds.table.num_classes = cfg.num_classes;
    ds.table.rows.reserve(static_cast<std::size_t>(n));
    ds.true_labels.reserve(static_cast<std::size_t>(n));
    ds.noise_mask.reserve(static_cast<std::size_t>(n));

    std::int64_t sample_id = 0;
    for (int v = 0; v < cfg.num_videos; ++v) {
        const int tc = video_class[static_cast<std::size_t>(v)];
        for (int f = 0; f < cfg.frames_per_video; ++f, ++sample_id) {
            const int flipped =
                noisy[static_cast<std::size_t>(v)][static_cast<std::size_t>(f)];
            trcl::PredictionRow row;
            row.sample_id = sample_id;
            row.video_id = v;
            row.frame_idx = f;
            row.noisy_label = flipped >= 0 ? flipped : tc;
            row.probs = teacher_row(cfg.num_classes, tc, row.noisy_label,
                                    cfg.teacher_sharpness, cfg.label_leak, rng);
            ds.table.rows.push_back(std::move(row));
            ds.true_labels.push_back(tc);
            ds.noise_mask.push_back(flipped >= 0);
        }
    }
    return ds;
}

}  // namespace dsdkit::harness
