#include "amps/cli.hpp"

#include "amps/audio.hpp"
#include "amps/common.hpp"
#include "amps/config.hpp"
#include "amps/dataset.hpp"
#include "amps/eval.hpp"
#include "amps/features.hpp"
#include "amps/io_util.hpp"
#include "amps/model_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace amps::cli {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Logging (stderr; level from the AMPS_LOG environment variable)
// ---------------------------------------------------------------------------

enum class LogLevel { debug = 0, info = 1, warn = 2, error = 3, quiet = 4 };

LogLevel log_threshold() {
    static const LogLevel cached = [] {
        const char* v = std::getenv("AMPS_LOG");
        const std::string s = v ? v : "info";
        if (s == "debug") return LogLevel::debug;
        if (s == "warn" || s == "warning") return LogLevel::warn;
        if (s == "error") return LogLevel::error;
        if (s == "quiet" || s == "off") return LogLevel::quiet;
        return LogLevel::info;
    }();
    return cached;
}

std::mutex& log_mutex() {
    static std::mutex m;
    return m;
}

void log_at(LogLevel lvl, const std::string& msg) {
    if (int(lvl) < int(log_threshold())) return;
    const char* tag = lvl == LogLevel::debug  ? "debug"
                      : lvl == LogLevel::info ? "info"
                      : lvl == LogLevel::warn ? "warn"
                                              : "error";
    const std::scoped_lock lock(log_mutex());
    std::fprintf(stderr, "amps: %s: %s\n", tag, msg.c_str());
}

// One physical line regardless of what the message contains.
std::string one_line(std::string s) {
    for (char& c : s)
        if (c == '\n' || c == '\r' || c == '\t') c = ' ';
    return s;
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

int exit_code(ErrorCategory cat) {
    switch (cat) {
    case ErrorCategory::config: return 2;
    case ErrorCategory::io: return 3;
    case ErrorCategory::data: return 4;
    case ErrorCategory::model: return 5;
    case ErrorCategory::internal: return 6;
    }
    return 6;
}

void require_path(const std::string& value, const char* key) {
    if (value.empty())
        fail(ErrorCategory::config,
             std::string("paths.") + key + " is required for this command");
}

// Creates the output directory and records the exact configuration the run
// used, so outputs are reproducible from what sits next to them.
fs::path prepare_output_dir(const config::RunConfig& cfg, const std::string& resolved) {
    const fs::path dir =
        cfg.paths.output_dir.empty() ? fs::path(".") : fs::path(cfg.paths.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        fail(ErrorCategory::io,
             "cannot create output directory " + dir.string() + ": " + ec.message());
    io::atomic_write_text(dir / "resolved_config.json", resolved);
    return dir;
}

fs::path features_path(const config::RunConfig& cfg, const fs::path& out_dir) {
    if (!cfg.paths.features.empty()) return fs::path(cfg.paths.features);
    return out_dir / ("features_" + cfg.experiment.feature_set + ".csv");
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// ---------------------------------------------------------------------------
// build-dataset
// ---------------------------------------------------------------------------

int cmd_build_dataset(const config::RunConfig& cfg, const std::string& resolved) {
    require_path(cfg.paths.audio_dir, "audio_dir");
    require_path(cfg.paths.labels_dir, "labels_dir");
    require_path(cfg.paths.manifest, "manifest");
    const fs::path dir = prepare_output_dir(cfg, resolved);

    dataset::BuildOptions opts = cfg.dataset;
    opts.keep_samples = false;
    const dataset::LabeledDataset ds = dataset::build_dataset(
        cfg.paths.audio_dir, cfg.paths.labels_dir, cfg.paths.manifest, opts);

    const fs::path out = dir / "windows.csv";
    dataset::export_windows_csv(ds, out);

    char pct[32];
    std::snprintf(pct, sizeof(pct), "%.3g", 100.0 * ds.positive_fraction);
    std::printf("%zu windows, %s%% positive\n", ds.windows.size(), pct);
    log_at(LogLevel::info, "wrote " + out.string());
    return 0;
}

// ---------------------------------------------------------------------------
// extract
// ---------------------------------------------------------------------------

// Fragments are keyed by the parts of the configuration that change the
// extracted values, so resuming never reuses rows computed under different
// parameters.
std::string extract_cache_tag(const std::string& resolved) {
    const ordered_json j = ordered_json::parse(resolved);
    ordered_json basis;
    basis["feature_set"] = j.at("feature_set");
    basis["dataset"] = j.at("dataset");
    basis["preprocess"] = j.at("preprocess");
    basis["features"] = j.at("features");
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%08llx",
                  static_cast<unsigned long long>(fnv1a64(basis.dump()) & 0xffffffffull));
    return buf;
}

int cmd_extract(const config::RunConfig& cfg, const std::string& resolved) {
    require_path(cfg.paths.audio_dir, "audio_dir");
    require_path(cfg.paths.labels_dir, "labels_dir");
    require_path(cfg.paths.manifest, "manifest");
    const fs::path dir = prepare_output_dir(cfg, resolved);

    const std::vector<dataset::ManifestEntry> entries =
        dataset::parse_manifest(cfg.paths.manifest);
    if (entries.empty()) fail(ErrorCategory::data, "manifest lists no recordings");

    const std::string set = cfg.experiment.feature_set;
    const std::vector<std::string> names =
        set == "amps" ? features::amps_feature_names()
                      : features::mfcc_feature_names(cfg.features.mfcc_coeffs);
    const std::string header =
        features::format_features_csv({names, {}}); // header line only

    const fs::path cache =
        dir / ("extract_cache_" + set + "_" + extract_cache_tag(resolved));
    std::error_code ec;
    fs::create_directories(cache, ec);
    if (ec)
        fail(ErrorCategory::io,
             "cannot create cache directory " + cache.string() + ": " + ec.message());

    const features::FeatureExtractor extractor(cfg.preprocess, cfg.features);

    // Returns true when the fragment was already present from an earlier run.
    auto process_one = [&](const dataset::ManifestEntry& entry) {
        const fs::path frag = cache / (entry.id + ".csv");
        if (fs::exists(frag)) return true;

        const audio::Recording rec = audio::load_recording(
            fs::path(cfg.paths.audio_dir) / (entry.id + ".wav"),
            cfg.dataset.expected_rate);
        std::vector<dataset::AnalysisWindow> windows =
            dataset::window_recording(rec, cfg.dataset.window, true);

        std::vector<dataset::AnnotationEvent> events;
        const fs::path ann = fs::path(cfg.paths.labels_dir) / (entry.id + ".csv");
        if (fs::exists(ann))
            events = dataset::parse_annotations(ann);
        else if (!entry.no_bird)
            fail(ErrorCategory::data,
                 "no annotation file for " + entry.id +
                     " (only no-bird recordings may omit one)");
        dataset::label_windows(windows, events, cfg.dataset.tags,
                               cfg.dataset.window.window_s, cfg.dataset.min_overlap_s);

        features::FeatureTable part;
        part.names = names;
        for (const dataset::AnalysisWindow& w : windows) {
            features::FeatureRow row;
            row.recording_id = w.recording_id;
            row.window_index = w.index;
            row.label = int(w.label);
            if (set == "amps") {
                const auto v = extractor.extract_amps(w.samples).values();
                row.values.assign(v.begin(), v.end());
            } else {
                row.values = extractor.extract_mfcc(w.samples).values();
            }
            part.rows.push_back(std::move(row));
        }
        std::string text = features::format_features_csv(part);
        text.erase(0, text.find('\n') + 1); // rows only; the header is shared
        io::atomic_write_text(frag, text);
        return false;
    };

    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::mutex mu; // counters, skip list, and the fatal slot
    std::size_t done = 0, reused = 0, extracted = 0;
    std::vector<std::pair<std::string, std::string>> skipped;
    std::exception_ptr fatal;

    auto worker = [&] {
        while (!stop.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= entries.size()) break;
            const dataset::ManifestEntry& entry = entries[i];
            try {
                const bool was_cached = process_one(entry);
                std::size_t at;
                {
                    const std::scoped_lock lock(mu);
                    (was_cached ? reused : extracted) += 1;
                    at = ++done;
                }
                log_at(LogLevel::info,
                       "extract: " + entry.id + (was_cached ? " cached (" : " done (") +
                           std::to_string(at) + "/" + std::to_string(entries.size()) + ")");
            } catch (const Error& e) {
                if (e.category() == ErrorCategory::io || e.category() == ErrorCategory::data) {
                    {
                        const std::scoped_lock lock(mu);
                        skipped.emplace_back(entry.id,
                                             std::string(e.category_name()) + ": " +
                                                 one_line(e.what()));
                        ++done;
                    }
                    log_at(LogLevel::warn,
                           "extract: skipping " + entry.id + ": " + one_line(e.what()));
                } else {
                    const std::scoped_lock lock(mu);
                    if (!fatal) fatal = std::current_exception();
                    stop.store(true);
                }
            } catch (...) {
                const std::scoped_lock lock(mu);
                if (!fatal) fatal = std::current_exception();
                stop.store(true);
            }
        }
    };

    std::size_t jobs = cfg.jobs ? cfg.jobs : std::thread::hardware_concurrency();
    jobs = std::max<std::size_t>(1, std::min(jobs, entries.size()));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (std::size_t i = 0; i < jobs; ++i) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    if (fatal) std::rethrow_exception(fatal);

    // Assemble the final table in manifest order, independent of scheduling.
    std::string out_text = header;
    std::size_t rows_from = 0;
    for (const dataset::ManifestEntry& entry : entries) {
        const fs::path frag = cache / (entry.id + ".csv");
        if (!fs::exists(frag)) continue;
        out_text += io::read_text_file(frag);
        ++rows_from;
    }
    if (rows_from == 0)
        fail(ErrorCategory::data, "no recording could be extracted; see " +
                                      (dir / "extract_report.json").string());
    const fs::path out = features_path(cfg, dir);
    io::atomic_write_text(out, out_text);

    ordered_json report;
    report["feature_set"] = set;
    report["recordings"] = entries.size();
    report["extracted"] = extracted;
    report["reused"] = reused;
    report["skipped"] = ordered_json::array();
    for (const auto& [id, reason] : skipped)
        report["skipped"].push_back({{"id", id}, {"reason", reason}});
    io::atomic_write_text(dir / "extract_report.json", report.dump(2) + "\n");

    std::printf("%zu recordings -> %s (%zu extracted, %zu reused, %zu skipped)\n",
                entries.size(), out.string().c_str(), extracted, reused,
                skipped.size());
    return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

int cmd_train(const config::RunConfig& cfg, const std::string& resolved) {
    const fs::path dir = prepare_output_dir(cfg, resolved);
    const features::FeatureTable table =
        features::load_features_csv(features_path(cfg, dir).string());
    const classifiers::Matrix x = eval::feature_matrix(table);
    const classifiers::Labels y = eval::feature_labels(table);
    if (cfg.experiment.methods.empty())
        fail(ErrorCategory::config, "eval.methods lists no methods to train");

    for (const std::string& method : cfg.experiment.methods) {
        const fs::path out = dir / ("model_" + method + ".json");
        if (method == "logistic") {
            model_io::save_model(classifiers::train_logistic(x, y, cfg.experiment.logistic),
                                 out.string());
        } else if (method == "svm") {
            model_io::save_model(classifiers::train_svm_rbf(x, y, cfg.experiment.svm),
                                 out.string());
        } else if (method == "forest") {
            model_io::save_model(classifiers::train_forest(x, y, cfg.experiment.forest),
                                 out.string());
        } else if (method == "stacking") {
            model_io::save_model(classifiers::train_stacking(x, y, cfg.experiment.stacking),
                                 out.string());
        } else {
            fail(ErrorCategory::config, "unknown method '" + method + "'");
        }
        std::printf("saved %s\n", out.string().c_str());
    }
    return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

int cmd_evaluate(const config::RunConfig& cfg, const std::string& resolved) {
    const fs::path dir = prepare_output_dir(cfg, resolved);
    const features::FeatureTable table =
        features::load_features_csv(features_path(cfg, dir).string());

    const eval::ExperimentReport report = eval::run_experiment(table, cfg.experiment);

    // Timing is a measurement, not a result: it goes to the log, and the
    // persisted report stays byte-identical across reruns of one config.
    for (const eval::ExperimentRow& row : report.rows) {
        char line[160];
        std::snprintf(line, sizeof(line), "evaluate: %s train %.3fs predict %.3fs",
                      row.method.c_str(), row.train_seconds, row.eval_seconds);
        log_at(LogLevel::info, line);
    }
    io::atomic_write_text(dir / "report.json",
                          eval::format_report_json(report, false));
    const std::string summary = eval::format_summary_csv(report);
    io::atomic_write_text(dir / "summary.csv", summary);
    std::fputs(summary.c_str(), stdout);
    return 0;
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

std::size_t model_dim(const model_io::AnyModel& m) {
    return std::visit(
        [](const auto& model) -> std::size_t {
            using T = std::decay_t<decltype(model)>;
            if constexpr (std::is_same_v<T, classifiers::ForestModel>)
                return model.dim;
            else if constexpr (std::is_same_v<T, classifiers::StackingModel>)
                return model.logistic.dim();
            else
                return model.dim();
        },
        m);
}

int cmd_predict(const config::RunConfig& cfg, const std::string& resolved,
                const std::string& model_path, const std::string& input_path) {
    const fs::path dir = prepare_output_dir(cfg, resolved);
    const model_io::AnyModel model = model_io::load_model(model_path);

    const std::string set = cfg.experiment.feature_set;
    const std::size_t want = set == "amps" ? 11 : 2 * cfg.features.mfcc_coeffs;
    if (model_dim(model) != want)
        fail(ErrorCategory::data,
             "model expects " + std::to_string(model_dim(model)) +
                 " features but the " + set + " extractor produces " +
                 std::to_string(want));

    const audio::Recording rec =
        audio::load_recording(input_path, cfg.preprocess.sample_rate);
    const auto win = std::llround(cfg.dataset.window.window_s * rec.sample_rate);
    const auto hop = std::llround(cfg.dataset.window.hop_s * rec.sample_rate);
    if (win <= 0 || hop <= 0)
        fail(ErrorCategory::config, "window and hop must be positive");
    if (rec.samples.size() < std::size_t(win))
        fail(ErrorCategory::data,
             "recording is shorter than one analysis window (" +
                 std::to_string(rec.samples.size()) + " of " + std::to_string(win) +
                 " samples)");
    const std::size_t count =
        (rec.samples.size() - std::size_t(win)) / std::size_t(hop) + 1;

    const features::FeatureExtractor extractor(cfg.preprocess, cfg.features);

    std::string text = "window_index,start_sec,label,score\n";
    std::size_t positives = 0;
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t start = k * std::size_t(hop);
        const std::span<const double> window(rec.samples.data() + start,
                                             std::size_t(win));
        std::vector<double> values;
        if (set == "amps") {
            const auto v = extractor.extract_amps(window).values();
            values.assign(v.begin(), v.end());
        } else {
            values = extractor.extract_mfcc(window).values();
        }
        const classifiers::Prediction p = model_io::predict_any(model, values);
        positives += std::size_t(p.label == 1);
        text += std::to_string(k) + "," +
                io::fmt_double(double(start) / rec.sample_rate) + "," +
                std::to_string(p.label) + "," + io::fmt_double(p.score) + "\n";
    }
    text += "activity_fraction," +
            io::fmt_double(double(positives) / double(count)) + "\n";

    std::fputs(text.c_str(), stdout);
    io::atomic_write_text(dir / "predictions.csv", text);
    return 0;
}

// ---------------------------------------------------------------------------
// count-ops
// ---------------------------------------------------------------------------

void print_forest_counts(std::size_t trees, std::size_t depth, std::size_t fpn) {
    std::printf("trees=%zu\nmax_depth=%zu\nfeatures_per_node=%zu\n", trees, depth, fpn);
    std::printf("worst_case_comparisons=%llu\n",
                static_cast<unsigned long long>(eval::count_rf_ops(trees, depth, fpn)));
    std::printf("path_comparisons=%llu\n",
                static_cast<unsigned long long>(eval::count_rf_path_ops(trees, depth)));
}

int cmd_count_ops(const config::RunConfig& cfg, const std::string& resolved,
                  const std::string& model_path) {
    prepare_output_dir(cfg, resolved);
    if (model_path.empty()) {
        const auto& f = cfg.experiment.forest;
        std::printf("kind=forest\n");
        print_forest_counts(f.trees, f.max_depth, f.features_per_node);
        return 0;
    }
    const model_io::AnyModel model = model_io::load_model(model_path);
    std::printf("kind=%s\n", model_io::kind_name(model_io::peek_kind(model_path)));
    std::visit(
        [](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, classifiers::LogisticModel>) {
                std::printf("features=%zu\nmultiply_adds=%zu\n", m.dim(), m.dim());
            } else if constexpr (std::is_same_v<T, classifiers::SvmModel>) {
                std::printf("support_vectors=%zu\nkernel_evaluations=%zu\n",
                            m.support_vectors.size(), m.support_vectors.size());
            } else if constexpr (std::is_same_v<T, classifiers::ForestModel>) {
                print_forest_counts(m.cfg.trees, m.cfg.max_depth,
                                    m.cfg.features_per_node);
            } else {
                print_forest_counts(m.forest.cfg.trees, m.forest.cfg.max_depth,
                                    m.forest.cfg.features_per_node);
                std::printf("base_support_vectors=%zu\nmeta_support_vectors=%zu\n",
                            m.svm.support_vectors.size(),
                            m.meta.support_vectors.size());
            }
        },
        model);
    return 0;
}

} // namespace

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

int run(int argc, const char* const* argv) {
    CLI::App app{"Bird activity detection toolkit: dataset windowing, acoustic "
                 "feature extraction, lightweight classifiers, and evaluation."};
    app.require_subcommand(1);
    app.footer("Environment:\n  AMPS_LOG=debug|info|warn|error|quiet   stderr "
               "log level (default info)");

    std::string config_path;
    std::vector<std::string> overrides;
    std::string model_path;
    std::string input_path;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "JSON configuration file");
        sub->add_option("-s,--set", overrides,
                        "override one configuration key (key.path=value)");
        return sub;
    };

    CLI::App* sub_build = add_common(
        app.add_subcommand("build-dataset", "Window and label a recording corpus"));
    CLI::App* sub_extract = add_common(app.add_subcommand(
        "extract", "Extract per-window feature vectors (resumable)"));
    CLI::App* sub_train = add_common(app.add_subcommand(
        "train", "Fit the configured classifiers on a feature table"));
    CLI::App* sub_evaluate = add_common(app.add_subcommand(
        "evaluate", "Split, train, and score every configured method"));
    CLI::App* sub_predict = add_common(app.add_subcommand(
        "predict", "Label the one-second windows of a WAV file"));
    sub_predict->add_option("--model", model_path, "trained model file")->required();
    sub_predict->add_option("--input", input_path, "WAV file to label")->required();
    CLI::App* sub_count = add_common(
        app.add_subcommand("count-ops", "Report a model's inference cost"));
    sub_count->add_option("--model", model_path, "trained model file (defaults "
                                                 "to the configured forest)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help and friends
        std::fprintf(stderr, "error:config: %s\n", one_line(e.what()).c_str());
        return exit_code(ErrorCategory::config);
    }

    try {
        std::string resolved;
        const config::RunConfig cfg =
            config::load_run_config(config_path, overrides, &resolved);
        if (sub_build->parsed()) return cmd_build_dataset(cfg, resolved);
        if (sub_extract->parsed()) return cmd_extract(cfg, resolved);
        if (sub_train->parsed()) return cmd_train(cfg, resolved);
        if (sub_evaluate->parsed()) return cmd_evaluate(cfg, resolved);
        if (sub_predict->parsed()) return cmd_predict(cfg, resolved, model_path, input_path);
        if (sub_count->parsed()) return cmd_count_ops(cfg, resolved, model_path);
        fail(ErrorCategory::internal, "no command dispatched");
    } catch (const Error& e) {
        std::fprintf(stderr, "error:%s: %s\n", e.category_name(),
                     one_line(e.what()).c_str());
        return exit_code(e.category());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error:internal: %s\n", one_line(e.what()).c_str());
        return exit_code(ErrorCategory::internal);
    }
}

} // namespace amps::cli
