#pragma once

#include "amps/dataset.hpp"
#include "amps/eval.hpp"
#include "amps/features.hpp"
#include "amps/preprocess.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace amps::config {

struct Paths {
    std::string audio_dir;
    std::string labels_dir;
    std::string manifest;
    std::string output_dir = "out";
    // Feature table consumed by train/evaluate; empty selects
    // <output_dir>/features_<feature_set>.csv, which is where extract writes.
    std::string features;
};

// Full runtime configuration: one document covering paths, dataset assembly,
// preprocessing, feature extraction, the classifier hyperparameters, and the
// evaluation protocol. Every field has a working default, so an empty config
// file (or none at all) is valid.
struct RunConfig {
    Paths paths;
    std::size_t jobs = 0; // extraction worker threads; 0 = machine's count
    dataset::BuildOptions dataset;
    preprocess::PreprocessConfig preprocess;
    features::FeatureConfig features;
    // feature_set, methods, split, and the classifier blocks. The stacking
    // ensemble reuses the top-level classifier blocks as its base models;
    // only its fold count, seed, vote mode, and meta kernel are separate.
    eval::ExperimentConfig experiment;
};

// The complete default configuration as a pretty-printed JSON document.
std::string default_config_text();

// Defaults, overlaid with the optional JSON config file, overlaid with
// key.path=value override pairs, in that order. Unknown keys, type
// mismatches, and malformed overrides are config errors. When
// `resolved_json_out` is given it receives the merged document — the exact
// configuration the run used — for persisting next to the outputs.
RunConfig load_run_config(const std::string& config_path,
                          const std::vector<std::string>& overrides,
                          std::string* resolved_json_out = nullptr);

} // namespace amps::config
