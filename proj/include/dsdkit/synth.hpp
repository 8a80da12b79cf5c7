#pragma once

#include <cstdint>
#include <vector>

#include "dsdkit/trcl.hpp"

// Synthetic noisy-video-dataset generator. Each video carries one true class;
// label noise arrives as temporally contiguous bursts whose frames are
// relabeled to a wrong class, mirroring video-level annotation mistakes. The
// simulated teacher concentrates probability mass on the TRUE class, so its
// predictions expose the injected noise.
namespace dsdkit::harness {

struct SynthConfig {
    std::uint64_t seed = 0;
    int num_videos = 10;
    int frames_per_video = 200;
    int num_classes = 5;
    double noise_rate = 0.2;       // in [0, 1)
    int burst_min = 4;             // burst length bounds, frames
    int burst_max = 24;
    double teacher_sharpness = 6.0;  // kappa: true-class logit offset
    // Teachers are fit on the noisy labels, so on noisy frames part of the
    // true-class evidence leaks toward the (wrong) annotation. 0 = oracle
    // teacher, values near 1 = full memorization of the noise.
    double label_leak = 0.7;
    int protected_class = -1;      // this class receives/produces no noise; -1 = none
    bool iid_noise = false;        // ablation: per-frame flips instead of bursts
};

struct SynthDataset {
    trcl::PredictionTable table;
    std::vector<int> true_labels;   // parallel to table.rows
    std::vector<bool> noise_mask;   // mask[i] <=> noisy_label != true_label
};

SynthDataset synth_dataset(const SynthConfig& cfg);

}  // namespace dsdkit::harness
