#include "amps/config.hpp"

#include "amps/common.hpp"
#include "amps/io_util.hpp"

#include <json.hpp>

#include <string>
#include <utility>
#include <vector>

namespace amps::config {

namespace {

using ordered_json = nlohmann::ordered_json;

// Any json library exception escaping a config operation is a config error;
// it means the document's shape did not match the schema.
template <typename Fn>
auto guard(Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error&) {
        throw;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCategory::config, std::string("bad configuration value: ") + e.what());
    }
}

ordered_json svm_block(const classifiers::SvmConfig& c) {
    return {{"c", c.c},
            {"gamma", c.gamma},
            {"tol", c.tol},
            {"max_iter", c.max_iter},
            {"cache_rows", c.cache_rows}};
}

ordered_json default_json() {
    const RunConfig d{};
    ordered_json j;
    j["paths"] = {{"audio_dir", d.paths.audio_dir},
                  {"labels_dir", d.paths.labels_dir},
                  {"manifest", d.paths.manifest},
                  {"output_dir", d.paths.output_dir},
                  {"features", d.paths.features}};
    j["jobs"] = d.jobs;
    j["feature_set"] = d.experiment.feature_set;

    j["dataset"] = {{"window_s", d.dataset.window.window_s},
                    {"hop_s", d.dataset.window.hop_s},
                    {"target_windows", d.dataset.window.target_windows},
                    {"allow_truncate", d.dataset.window.allow_truncate},
                    {"min_overlap_s", d.dataset.min_overlap_s},
                    {"expected_rate", d.dataset.expected_rate},
                    {"non_bird_prefixes", d.dataset.tags.non_bird_prefixes}};

    const auto& p = d.preprocess;
    j["preprocess"] = {{"sample_rate", p.sample_rate},
                       {"band_low_hz", p.band_low_hz},
                       {"band_high_hz", p.band_high_hz},
                       {"bandpass_taps", p.bandpass_taps},
                       {"norm_guard", p.norm_guard},
                       {"gate_band_low_hz", p.gate_band_low_hz},
                       {"gate_band_high_hz", p.gate_band_high_hz},
                       {"gate_ratio_threshold", p.gate_ratio_threshold},
                       {"gate_frame_s", p.gate_frame.length_s},
                       {"gate_hop_s", p.gate_frame.hop_s},
                       {"gate_median_block", p.gate_median_block},
                       {"nr_frame_s", p.nr_frame.length_s},
                       {"nr_hop_s", p.nr_frame.hop_s},
                       {"nr_keep", p.nr_keep},
                       {"bank_center_hz", p.bank_center_hz},
                       {"bank_count", p.bank_count},
                       {"bank_band_low_hz", p.bank_band_low_hz},
                       {"bank_band_high_hz", p.bank_band_high_hz}};

    const auto& f = d.features;
    ordered_json bands = ordered_json::array();
    for (const auto& [lo, hi] : f.am_bands) bands.push_back({lo, hi});
    j["features"] = {{"frame_s", f.frame.length_s},
                     {"hop_s", f.frame.hop_s},
                     {"yin_threshold", f.yin_threshold},
                     {"pitch_min_hz", f.pitch_min_hz},
                     {"pitch_max_hz", f.pitch_max_hz},
                     {"track_len", f.track_len},
                     {"rolloff_fraction", f.rolloff_fraction},
                     {"am_bands", bands},
                     {"am_band_taps", f.am_band_taps},
                     {"am_blocks", f.am_blocks},
                     {"am_block_len", f.am_block_len},
                     {"am_min_hz", f.am_min_hz},
                     {"am_max_hz", f.am_max_hz},
                     {"prominence_cutoff", f.prominence_cutoff},
                     {"strong_factor", f.strong_factor},
                     {"depth_threshold", f.depth_threshold},
                     {"mfcc_coeffs", f.mfcc_coeffs},
                     {"mel_filters", f.mel_filters},
                     {"mel_log_floor", f.mel_log_floor}};

    const auto& e = d.experiment;
    j["classifiers"] = {
        {"logistic",
         {{"threshold", e.logistic.threshold},
          {"lambda", e.logistic.lambda},
          {"grad_tol", e.logistic.grad_tol},
          {"max_iter", e.logistic.max_iter}}},
        {"svm", svm_block(e.svm)},
        {"forest",
         {{"trees", e.forest.trees},
          {"max_depth", e.forest.max_depth},
          {"min_samples", e.forest.min_samples},
          {"features_per_node", e.forest.features_per_node},
          {"seed", e.forest.seed},
          {"use_gini", e.forest.use_gini}}},
        {"stacking",
         {{"folds", e.stacking.folds},
          {"seed", e.stacking.seed},
          {"hard_labels", e.stacking.hard_labels},
          {"meta", svm_block(e.stacking.meta)}}}};

    j["eval"] = {{"test_fraction", e.split.test_fraction},
                 {"folds", e.split.folds},
                 {"seed", e.split.seed},
                 {"grouping", eval::grouping_name(e.split.grouping)},
                 {"methods", e.methods}};
    return j;
}

// Overlay `over` onto `base`, recursing through sections. Keys missing from
// the defaults are rejected so typos fail loudly instead of being ignored.
void merge_into(ordered_json& base, const ordered_json& over, const std::string& prefix) {
    if (!over.is_object())
        fail(ErrorCategory::config,
             (prefix.empty() ? std::string("the configuration root")
                             : "'" + prefix + "'") +
                 " must be a JSON object");
    for (auto it = over.begin(); it != over.end(); ++it) {
        const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!base.contains(it.key()))
            fail(ErrorCategory::config, "unknown configuration key '" + path + "'");
        ordered_json& slot = base[it.key()];
        if (slot.is_object()) {
            merge_into(slot, it.value(), path);
            continue;
        }
        const ordered_json& v = it.value();
        const bool ok = (slot.is_number() && v.is_number()) ||
                        (slot.is_string() && v.is_string()) ||
                        (slot.is_boolean() && v.is_boolean()) ||
                        (slot.is_array() && v.is_array());
        if (!ok)
            fail(ErrorCategory::config,
                 "configuration key '" + path + "' has the wrong type");
        slot = v;
    }
}

void apply_override(ordered_json& root, const std::string& setting) {
    const std::size_t eq = setting.find('=');
    if (eq == std::string::npos || eq == 0)
        fail(ErrorCategory::config,
             "override '" + setting + "' is not of the form key.path=value");
    const std::string key = setting.substr(0, eq);
    const std::string raw = setting.substr(eq + 1);

    // Walk the dotted path down the merged document.
    ordered_json* slot = &root;
    std::size_t pos = 0;
    while (true) {
        const std::size_t dot = key.find('.', pos);
        const std::string part = key.substr(pos, dot - pos);
        if (!slot->is_object() || !slot->contains(part))
            fail(ErrorCategory::config, "unknown configuration key '" + key + "'");
        slot = &(*slot)[part];
        if (dot == std::string::npos) break;
        pos = dot + 1;
    }
    if (slot->is_object())
        fail(ErrorCategory::config,
             "'" + key + "' is a configuration section, not a value");

    if (slot->is_string()) { // strings are taken verbatim, no quoting needed
        *slot = raw;
        return;
    }
    const ordered_json v = ordered_json::parse(raw, nullptr, false);
    const bool ok = !v.is_discarded() &&
                    ((slot->is_number() && v.is_number()) ||
                     (slot->is_boolean() && v.is_boolean()) ||
                     (slot->is_array() && v.is_array()));
    if (!ok)
        fail(ErrorCategory::config,
             "override '" + key + "': cannot read '" + raw + "' as the key's type");
    *slot = v;
}

classifiers::SvmConfig svm_from(const ordered_json& j) {
    classifiers::SvmConfig c;
    c.c = j.at("c").get<double>();
    c.gamma = j.at("gamma").get<double>();
    c.tol = j.at("tol").get<double>();
    c.max_iter = j.at("max_iter").get<std::size_t>();
    c.cache_rows = j.at("cache_rows").get<std::size_t>();
    return c;
}

RunConfig config_from_json(const ordered_json& j) {
    RunConfig c;
    const auto& paths = j.at("paths");
    c.paths.audio_dir = paths.at("audio_dir").get<std::string>();
    c.paths.labels_dir = paths.at("labels_dir").get<std::string>();
    c.paths.manifest = paths.at("manifest").get<std::string>();
    c.paths.output_dir = paths.at("output_dir").get<std::string>();
    c.paths.features = paths.at("features").get<std::string>();
    c.jobs = j.at("jobs").get<std::size_t>();

    const auto& ds = j.at("dataset");
    c.dataset.window.window_s = ds.at("window_s").get<double>();
    c.dataset.window.hop_s = ds.at("hop_s").get<double>();
    c.dataset.window.target_windows = ds.at("target_windows").get<int>();
    c.dataset.window.allow_truncate = ds.at("allow_truncate").get<bool>();
    c.dataset.min_overlap_s = ds.at("min_overlap_s").get<double>();
    c.dataset.expected_rate = ds.at("expected_rate").get<double>();
    c.dataset.tags.non_bird_prefixes =
        ds.at("non_bird_prefixes").get<std::vector<std::string>>();

    const auto& p = j.at("preprocess");
    c.preprocess.sample_rate = p.at("sample_rate").get<double>();
    c.preprocess.band_low_hz = p.at("band_low_hz").get<double>();
    c.preprocess.band_high_hz = p.at("band_high_hz").get<double>();
    c.preprocess.bandpass_taps = p.at("bandpass_taps").get<std::size_t>();
    c.preprocess.norm_guard = p.at("norm_guard").get<double>();
    c.preprocess.gate_band_low_hz = p.at("gate_band_low_hz").get<double>();
    c.preprocess.gate_band_high_hz = p.at("gate_band_high_hz").get<double>();
    c.preprocess.gate_ratio_threshold = p.at("gate_ratio_threshold").get<double>();
    c.preprocess.gate_frame.length_s = p.at("gate_frame_s").get<double>();
    c.preprocess.gate_frame.hop_s = p.at("gate_hop_s").get<double>();
    c.preprocess.gate_median_block = p.at("gate_median_block").get<std::size_t>();
    c.preprocess.nr_frame.length_s = p.at("nr_frame_s").get<double>();
    c.preprocess.nr_frame.hop_s = p.at("nr_hop_s").get<double>();
    c.preprocess.nr_keep = p.at("nr_keep").get<std::size_t>();
    c.preprocess.bank_center_hz = p.at("bank_center_hz").get<double>();
    c.preprocess.bank_count = p.at("bank_count").get<std::size_t>();
    c.preprocess.bank_band_low_hz = p.at("bank_band_low_hz").get<double>();
    c.preprocess.bank_band_high_hz = p.at("bank_band_high_hz").get<double>();

    const auto& f = j.at("features");
    c.features.frame.length_s = f.at("frame_s").get<double>();
    c.features.frame.hop_s = f.at("hop_s").get<double>();
    c.features.yin_threshold = f.at("yin_threshold").get<double>();
    c.features.pitch_min_hz = f.at("pitch_min_hz").get<double>();
    c.features.pitch_max_hz = f.at("pitch_max_hz").get<double>();
    c.features.track_len = f.at("track_len").get<std::size_t>();
    c.features.rolloff_fraction = f.at("rolloff_fraction").get<double>();
    const auto& bands = f.at("am_bands");
    if (!bands.is_array() || bands.size() != c.features.am_bands.size())
        fail(ErrorCategory::config, "features.am_bands must list exactly 4 bands");
    for (std::size_t i = 0; i < c.features.am_bands.size(); ++i) {
        const auto& b = bands.at(i);
        if (!b.is_array() || b.size() != 2)
            fail(ErrorCategory::config,
                 "features.am_bands entries must be [low_hz, high_hz] pairs");
        c.features.am_bands[i] = {b.at(0).get<double>(), b.at(1).get<double>()};
    }
    c.features.am_band_taps = f.at("am_band_taps").get<std::size_t>();
    c.features.am_blocks = f.at("am_blocks").get<std::size_t>();
    c.features.am_block_len = f.at("am_block_len").get<std::size_t>();
    c.features.am_min_hz = f.at("am_min_hz").get<double>();
    c.features.am_max_hz = f.at("am_max_hz").get<double>();
    c.features.prominence_cutoff = f.at("prominence_cutoff").get<double>();
    c.features.strong_factor = f.at("strong_factor").get<double>();
    c.features.depth_threshold = f.at("depth_threshold").get<double>();
    c.features.mfcc_coeffs = f.at("mfcc_coeffs").get<std::size_t>();
    c.features.mel_filters = f.at("mel_filters").get<std::size_t>();
    c.features.mel_log_floor = f.at("mel_log_floor").get<double>();

    const auto& cl = j.at("classifiers");
    const auto& lg = cl.at("logistic");
    c.experiment.logistic.threshold = lg.at("threshold").get<double>();
    c.experiment.logistic.lambda = lg.at("lambda").get<double>();
    c.experiment.logistic.grad_tol = lg.at("grad_tol").get<double>();
    c.experiment.logistic.max_iter = lg.at("max_iter").get<std::size_t>();
    c.experiment.svm = svm_from(cl.at("svm"));
    const auto& fo = cl.at("forest");
    c.experiment.forest.trees = fo.at("trees").get<std::size_t>();
    c.experiment.forest.max_depth = fo.at("max_depth").get<std::size_t>();
    c.experiment.forest.min_samples = fo.at("min_samples").get<std::size_t>();
    c.experiment.forest.features_per_node = fo.at("features_per_node").get<std::size_t>();
    c.experiment.forest.seed = fo.at("seed").get<std::uint64_t>();
    c.experiment.forest.use_gini = fo.at("use_gini").get<bool>();
    const auto& st = cl.at("stacking");
    c.experiment.stacking.folds = st.at("folds").get<std::size_t>();
    c.experiment.stacking.seed = st.at("seed").get<std::uint64_t>();
    c.experiment.stacking.hard_labels = st.at("hard_labels").get<bool>();
    c.experiment.stacking.meta = svm_from(st.at("meta"));
    // The ensemble's base models share the standalone hyperparameter blocks.
    c.experiment.stacking.logistic = c.experiment.logistic;
    c.experiment.stacking.svm = c.experiment.svm;
    c.experiment.stacking.forest = c.experiment.forest;

    const auto& ev = j.at("eval");
    c.experiment.split.test_fraction = ev.at("test_fraction").get<double>();
    c.experiment.split.folds = ev.at("folds").get<std::size_t>();
    c.experiment.split.seed = ev.at("seed").get<std::uint64_t>();
    const std::string grouping = ev.at("grouping").get<std::string>();
    if (grouping == "by_recording")
        c.experiment.split.grouping = eval::SplitSpec::Grouping::by_recording;
    else if (grouping == "by_window")
        c.experiment.split.grouping = eval::SplitSpec::Grouping::by_window;
    else
        fail(ErrorCategory::config,
             "eval.grouping must be 'by_recording' or 'by_window', got '" +
                 grouping + "'");
    c.experiment.methods = ev.at("methods").get<std::vector<std::string>>();

    c.experiment.feature_set = j.at("feature_set").get<std::string>();
    if (c.experiment.feature_set != "amps" && c.experiment.feature_set != "mfcc")
        fail(ErrorCategory::config, "feature_set must be 'amps' or 'mfcc', got '" +
                                        c.experiment.feature_set + "'");
    return c;
}

} // namespace

std::string default_config_text() {
    return default_json().dump(2) + "\n";
}

RunConfig load_run_config(const std::string& config_path,
                          const std::vector<std::string>& overrides,
                          std::string* resolved_json_out) {
    return guard([&] {
        ordered_json merged = default_json();
        if (!config_path.empty()) {
            const std::string text = io::read_text_file(config_path);
            const ordered_json user = ordered_json::parse(text, nullptr, false);
            if (user.is_discarded())
                fail(ErrorCategory::config,
                     "configuration file " + config_path + " is not valid JSON");
            merge_into(merged, user, "");
        }
        for (const std::string& s : overrides) apply_override(merged, s);
        RunConfig cfg = config_from_json(merged);
        if (resolved_json_out) *resolved_json_out = merged.dump(2) + "\n";
        return cfg;
    });
}

} // namespace amps::config
