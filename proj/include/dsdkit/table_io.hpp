#pragma once

#include <string>

#include "dsdkit/synth.hpp"
#include "dsdkit/trcl.hpp"

// File formats of the cleaning pipeline. Floats are serialized with their
// shortest round-trip representation, so save -> load -> save is
// byte-identical.
namespace dsdkit::harness {

// CSV contract: header "sample_id,video_id,frame_idx,noisy_label,p0,...",
// UTF-8, comma separated. Loading validates the table and reports the line
// number of the first malformed row.
trcl::PredictionTable load_predictions_csv(const std::string& path);
void save_predictions_csv(const trcl::PredictionTable& table,
                          const std::string& path);

std::string predictions_to_csv(const trcl::PredictionTable& table);
trcl::PredictionTable predictions_from_csv(const std::string& text,
                                           const std::string& origin = "<memory>");

// NoiseReport JSON with fields flagged[], thresholds[], confusion[][],
// joint[][], config and iterations[].
std::string noise_report_to_json(const trcl::NoiseReport& report);
trcl::NoiseReport noise_report_from_json(const std::string& text);
void save_noise_report(const trcl::NoiseReport& report, const std::string& path);
trcl::NoiseReport load_noise_report(const std::string& path);

// Ground-truth sidecar written next to synthetic datasets:
// "sample_id,true_label,noisy_label,is_noise".
void save_truth_csv(const SynthDataset& ds, const std::string& path);
// Returns sample ids flagged as noise in a truth CSV.
std::set<std::int64_t> load_truth_noise_set(const std::string& path);

// Shortest round-trip decimal form of a double (via std::to_chars).
std::string format_double(double v);

}  // namespace dsdkit::harness
