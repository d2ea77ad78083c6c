#include "amps/eval.hpp"

#include "amps/common.hpp"
#include "amps/io_util.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>
#include <utility>

namespace amps::eval {

namespace {

std::size_t bounded(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(n));
}

void fisher_yates(std::vector<std::size_t>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[bounded(rng, i)]);
}

struct Group {
    std::vector<std::size_t> rows;
    std::size_t positives = 0;

    double rate() const {
        return rows.empty() ? 0.0
                            : static_cast<double>(positives) /
                                  static_cast<double>(rows.size());
    }
};

// Groups in first-appearance order; by_window treats every row as its own
// group so the split machinery stays identical.
std::vector<Group> collect_groups(std::span<const std::string> group_ids,
                                  std::span<const int> labels,
                                  SplitSpec::Grouping grouping) {
    if (group_ids.empty()) fail(ErrorCategory::data, "dataset is empty");
    if (group_ids.size() != labels.size())
        fail(ErrorCategory::data, "group ids and labels differ in count");
    for (int v : labels)
        if (v != 0 && v != 1)
            fail(ErrorCategory::data, "labels must be 0 or 1");

    std::vector<Group> groups;
    if (grouping == SplitSpec::Grouping::by_window) {
        groups.resize(group_ids.size());
        for (std::size_t i = 0; i < group_ids.size(); ++i) {
            groups[i].rows = {i};
            groups[i].positives = static_cast<std::size_t>(labels[i] == 1);
        }
        return groups;
    }
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < group_ids.size(); ++i) {
        auto [it, fresh] = index.try_emplace(group_ids[i], groups.size());
        if (fresh) groups.emplace_back();
        Group& g = groups[it->second];
        g.rows.push_back(i);
        g.positives += static_cast<std::size_t>(labels[i] == 1);
    }
    return groups;
}

// Shuffle then stable-sort by positive rate: equal-rate groups stay in
// seed-dependent order while the rate ordering carries the stratification.
std::vector<std::size_t> rate_sorted_order(const std::vector<Group>& groups,
                                           std::mt19937_64& rng) {
    std::vector<std::size_t> order(groups.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    fisher_yates(order, rng);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                         return groups[a].rate() < groups[b].rate();
                     });
    return order;
}

double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1p-53;
}

} // namespace

const char* grouping_name(SplitSpec::Grouping g) {
    return g == SplitSpec::Grouping::by_recording ? "by_recording" : "by_window";
}

SplitIndices split_rows(std::span<const std::string> group_ids,
                        std::span<const int> labels, const SplitSpec& spec) {
    if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0))
        fail(ErrorCategory::config, "test fraction must be inside (0, 1)");
    const std::vector<Group> groups =
        collect_groups(group_ids, labels, spec.grouping);
    if (groups.size() < 2)
        fail(ErrorCategory::data, "need at least two groups to split");

    std::mt19937_64 rng(spec.seed);
    const std::vector<std::size_t> order = rate_sorted_order(groups, rng);

    // Error diffusion down the rate-sorted list: the test set takes every
    // (1/fraction)-th group, so its size is within one group of the target
    // and its rate profile tracks the whole dataset's.
    SplitIndices out;
    double acc = unit_uniform(rng);
    for (std::size_t g : order) {
        acc += spec.test_fraction;
        if (acc >= 1.0) {
            acc -= 1.0;
            out.test.insert(out.test.end(), groups[g].rows.begin(),
                            groups[g].rows.end());
        } else {
            out.train.insert(out.train.end(), groups[g].rows.begin(),
                             groups[g].rows.end());
        }
    }
    if (out.train.empty() || out.test.empty())
        fail(ErrorCategory::data, "dataset too small to stratify a split");
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

std::pair<dataset::LabeledDataset, dataset::LabeledDataset>
split_windows(const dataset::LabeledDataset& ds, const SplitSpec& spec) {
    std::vector<std::string> ids;
    std::vector<int> labels;
    ids.reserve(ds.windows.size());
    for (const auto& w : ds.windows) {
        ids.push_back(w.recording_id);
        labels.push_back(static_cast<int>(w.label));
    }
    const SplitIndices idx = split_rows(ids, labels, spec);

    auto take = [&](const std::vector<std::size_t>& rows) {
        dataset::LabeledDataset part;
        std::size_t positives = 0;
        for (std::size_t r : rows) {
            part.windows.push_back(ds.windows[r]);
            positives += static_cast<std::size_t>(ds.windows[r].label ==
                                                  dataset::Label::bird_present);
        }
        part.positive_fraction =
            part.windows.empty()
                ? 0.0
                : static_cast<double>(positives) /
                      static_cast<double>(part.windows.size());
        return part;
    };
    return {take(idx.train), take(idx.test)};
}

std::pair<features::FeatureTable, features::FeatureTable>
split_features(const features::FeatureTable& table, const SplitSpec& spec) {
    const SplitIndices idx =
        split_rows(feature_groups(table), feature_labels(table), spec);
    auto take = [&](const std::vector<std::size_t>& rows) {
        features::FeatureTable part;
        part.names = table.names;
        for (std::size_t r : rows) part.rows.push_back(table.rows[r]);
        return part;
    };
    return {take(idx.train), take(idx.test)};
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

namespace {

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0
                    : static_cast<double>(num) / static_cast<double>(den);
}

double f1_of(double p, double r) {
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

} // namespace

MetricsReport compute_metrics(const std::vector<int>& predicted,
                              const std::vector<int>& actual) {
    if (predicted.empty())
        fail(ErrorCategory::data, "cannot compute metrics of nothing");
    if (predicted.size() != actual.size())
        fail(ErrorCategory::data, "predictions and labels differ in count");

    MetricsReport r;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const bool p = predicted[i] == 1;
        const bool a = actual[i] == 1;
        if (p && a) ++r.tp;
        else if (p && !a) ++r.fp;
        else if (!p && a) ++r.fn;
        else ++r.tn;
    }
    r.accuracy = ratio(r.tp + r.tn, r.total());

    r.present.precision = ratio(r.tp, r.tp + r.fp);
    r.present.recall = ratio(r.tp, r.tp + r.fn);
    r.present.f1 = f1_of(r.present.precision, r.present.recall);
    r.present.support = r.tp + r.fn;

    r.absent.precision = ratio(r.tn, r.tn + r.fn);
    r.absent.recall = ratio(r.tn, r.tn + r.fp);
    r.absent.f1 = f1_of(r.absent.precision, r.absent.recall);
    r.absent.support = r.tn + r.fp;

    const double s0 = static_cast<double>(r.absent.support);
    const double s1 = static_cast<double>(r.present.support);
    const double total = s0 + s1;
    r.weighted_precision =
        (s0 * r.absent.precision + s1 * r.present.precision) / total;
    r.weighted_recall = (s0 * r.absent.recall + s1 * r.present.recall) / total;
    r.weighted_f1 = (s0 * r.absent.f1 + s1 * r.present.f1) / total;
    return r;
}

MetricsReport mean_metrics(const std::vector<MetricsReport>& reports) {
    if (reports.empty())
        fail(ErrorCategory::data, "cannot average zero reports");
    MetricsReport m;
    const double n = static_cast<double>(reports.size());
    for (const MetricsReport& r : reports) {
        m.tp += r.tp;
        m.fp += r.fp;
        m.tn += r.tn;
        m.fn += r.fn;
        m.accuracy += r.accuracy / n;
        m.absent.precision += r.absent.precision / n;
        m.absent.recall += r.absent.recall / n;
        m.absent.f1 += r.absent.f1 / n;
        m.absent.support += r.absent.support;
        m.present.precision += r.present.precision / n;
        m.present.recall += r.present.recall / n;
        m.present.f1 += r.present.f1 / n;
        m.present.support += r.present.support;
        m.weighted_precision += r.weighted_precision / n;
        m.weighted_recall += r.weighted_recall / n;
        m.weighted_f1 += r.weighted_f1 / n;
    }
    return m;
}

// ---------------------------------------------------------------------------
// Cross-validation
// ---------------------------------------------------------------------------

FoldAssignment assign_folds(std::span<const std::string> group_ids,
                            std::span<const int> labels, std::size_t folds,
                            std::uint64_t seed) {
    if (folds < 2) fail(ErrorCategory::config, "need at least 2 folds");
    const std::vector<Group> groups =
        collect_groups(group_ids, labels, SplitSpec::Grouping::by_recording);
    if (folds > groups.size())
        fail(ErrorCategory::data, "more folds than groups");

    std::mt19937_64 rng(seed);
    const std::vector<std::size_t> order = rate_sorted_order(groups, rng);
    const std::size_t start = bounded(rng, folds);

    // Dealing the rate-sorted groups round robin balances both the fold
    // sizes (within one group) and the label rates.
    FoldAssignment out;
    out.folds = folds;
    out.fold_of_row.assign(group_ids.size(), 0);
    for (std::size_t i = 0; i < order.size(); ++i) {
        const std::size_t f = (start + i) % folds;
        for (std::size_t row : groups[order[i]].rows) out.fold_of_row[row] = f;
    }
    return out;
}

CvResult kfold_cv(const classifiers::Matrix& x, const classifiers::Labels& y,
                  std::span<const std::string> group_ids, std::size_t folds,
                  std::uint64_t seed, const Trainer& trainer) {
    if (x.size() != y.size() || x.size() != group_ids.size())
        fail(ErrorCategory::data, "rows, labels, and group ids differ in count");
    CvResult result;
    result.assignment = assign_folds(group_ids, y, folds, seed);

    for (std::size_t f = 0; f < folds; ++f) {
        classifiers::Matrix train_x;
        classifiers::Labels train_y;
        classifiers::Matrix val_x;
        std::vector<int> val_y;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (result.assignment.fold_of_row[i] == f) {
                val_x.push_back(x[i]);
                val_y.push_back(y[i]);
            } else {
                train_x.push_back(x[i]);
                train_y.push_back(y[i]);
            }
        }
        const std::vector<int> predicted = trainer(train_x, train_y, val_x);
        if (predicted.size() != val_y.size())
            fail(ErrorCategory::internal,
                 "trainer returned the wrong number of predictions");
        result.fold_reports.push_back(compute_metrics(predicted, val_y));
    }
    result.mean = mean_metrics(result.fold_reports);
    return result;
}

// ---------------------------------------------------------------------------
// Grid search
// ---------------------------------------------------------------------------

GridSearchResult grid_search(
    const std::vector<std::string>& names,
    const std::function<MetricsReport(std::size_t)>& evaluate) {
    if (names.empty()) fail(ErrorCategory::config, "parameter grid is empty");
    GridSearchResult result;
    for (std::size_t i = 0; i < names.size(); ++i) {
        result.table.push_back({names[i], evaluate(i)});
        const MetricsReport& cand = result.table[i].metrics;
        const MetricsReport& best = result.table[result.best_index].metrics;
        // Objective: positive-class F1; ties fall to accuracy, then to the
        // earlier grid position (strict inequalities keep the incumbent).
        if (i == 0) continue;
        if (cand.present.f1 > best.present.f1 ||
            (cand.present.f1 == best.present.f1 && cand.accuracy > best.accuracy))
            result.best_index = i;
    }
    return result;
}

std::string format_grid_csv(const GridSearchResult& result) {
    std::string out = "Parameters,Acc.,F1-Score,Prec.,Recall,Chosen\n";
    for (std::size_t i = 0; i < result.table.size(); ++i) {
        const GridRow& row = result.table[i];
        std::string name = row.name;
        for (char& c : name)
            if (c == ',' || c == '\n' || c == '"') c = ';';
        out += "\"" + name + "\"," + io::fmt_double(row.metrics.accuracy) + "," +
               io::fmt_double(row.metrics.present.f1) + "," +
               io::fmt_double(row.metrics.present.precision) + "," +
               io::fmt_double(row.metrics.present.recall) + "," +
               (i == result.best_index ? "yes" : "no") + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Operation counts
// ---------------------------------------------------------------------------

std::uint64_t count_rf_ops(std::uint64_t trees, std::uint64_t max_depth,
                           std::uint64_t features_per_node) {
    return trees * max_depth * features_per_node;
}

std::uint64_t count_rf_ops(const classifiers::ForestModel& m) {
    return count_rf_ops(m.cfg.trees, m.cfg.max_depth, m.cfg.features_per_node);
}

std::uint64_t count_rf_path_ops(std::uint64_t trees, std::uint64_t max_depth) {
    return trees * max_depth;
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

classifiers::Matrix feature_matrix(const features::FeatureTable& table) {
    classifiers::Matrix x;
    x.reserve(table.rows.size());
    for (const auto& row : table.rows) x.push_back(row.values);
    return x;
}

classifiers::Labels feature_labels(const features::FeatureTable& table) {
    classifiers::Labels y;
    y.reserve(table.rows.size());
    for (const auto& row : table.rows) y.push_back(row.label);
    return y;
}

std::vector<std::string> feature_groups(const features::FeatureTable& table) {
    std::vector<std::string> g;
    g.reserve(table.rows.size());
    for (const auto& row : table.rows) g.push_back(row.recording_id);
    return g;
}

namespace {

void append_kv(std::string& s, const std::string& key, const std::string& v) {
    s += key;
    s += '=';
    s += v;
    s += ';';
}

void describe_logistic(std::string& s, const std::string& prefix,
                       const classifiers::LogisticConfig& c) {
    append_kv(s, prefix + "threshold", io::fmt_double(c.threshold));
    append_kv(s, prefix + "lambda", io::fmt_double(c.lambda));
    append_kv(s, prefix + "grad_tol", io::fmt_double(c.grad_tol));
    append_kv(s, prefix + "max_iter", std::to_string(c.max_iter));
}

void describe_svm(std::string& s, const std::string& prefix,
                  const classifiers::SvmConfig& c) {
    append_kv(s, prefix + "c", io::fmt_double(c.c));
    append_kv(s, prefix + "gamma", io::fmt_double(c.gamma));
    append_kv(s, prefix + "tol", io::fmt_double(c.tol));
    append_kv(s, prefix + "max_iter", std::to_string(c.max_iter));
    append_kv(s, prefix + "cache_rows", std::to_string(c.cache_rows));
}

void describe_forest(std::string& s, const std::string& prefix,
                     const classifiers::ForestConfig& c) {
    append_kv(s, prefix + "trees", std::to_string(c.trees));
    append_kv(s, prefix + "max_depth", std::to_string(c.max_depth));
    append_kv(s, prefix + "min_samples", std::to_string(c.min_samples));
    append_kv(s, prefix + "features_per_node", std::to_string(c.features_per_node));
    append_kv(s, prefix + "seed", std::to_string(c.seed));
    append_kv(s, prefix + "use_gini", c.use_gini ? "1" : "0");
}

} // namespace

std::string canonical_config_string(const ExperimentConfig& cfg) {
    std::string s;
    append_kv(s, "feature_set", cfg.feature_set);
    std::string methods;
    for (const auto& m : cfg.methods) {
        if (!methods.empty()) methods += ',';
        methods += m;
    }
    append_kv(s, "methods", methods);
    append_kv(s, "split.test_fraction", io::fmt_double(cfg.split.test_fraction));
    append_kv(s, "split.folds", std::to_string(cfg.split.folds));
    append_kv(s, "split.seed", std::to_string(cfg.split.seed));
    append_kv(s, "split.grouping", grouping_name(cfg.split.grouping));
    describe_logistic(s, "logistic.", cfg.logistic);
    describe_svm(s, "svm.", cfg.svm);
    describe_forest(s, "forest.", cfg.forest);
    append_kv(s, "stacking.folds", std::to_string(cfg.stacking.folds));
    append_kv(s, "stacking.seed", std::to_string(cfg.stacking.seed));
    append_kv(s, "stacking.hard_labels", cfg.stacking.hard_labels ? "1" : "0");
    describe_logistic(s, "stacking.logistic.", cfg.stacking.logistic);
    describe_svm(s, "stacking.svm.", cfg.stacking.svm);
    describe_forest(s, "stacking.forest.", cfg.stacking.forest);
    describe_svm(s, "stacking.meta.", cfg.stacking.meta);
    return s;
}

std::string config_hash(const ExperimentConfig& cfg) {
    // FNV-1a, 64-bit, over the canonical string.
    const std::string s = canonical_config_string(cfg);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
}

ExperimentReport run_experiment(const features::FeatureTable& table,
                                const ExperimentConfig& cfg) {
    if (cfg.methods.empty())
        fail(ErrorCategory::config, "experiment lists no methods");
    for (const auto& m : cfg.methods)
        if (m != "logistic" && m != "svm" && m != "forest" && m != "stacking")
            fail(ErrorCategory::config, "unknown method '" + m + "'");

    const auto [train_table, test_table] = split_features(table, cfg.split);
    const classifiers::Matrix train_x = feature_matrix(train_table);
    const classifiers::Labels train_y = feature_labels(train_table);
    const classifiers::Matrix test_x = feature_matrix(test_table);
    const classifiers::Labels test_y = feature_labels(test_table);

    ExperimentReport report;
    report.feature_set = cfg.feature_set;
    report.grouping = grouping_name(cfg.split.grouping);
    report.seed = cfg.split.seed;
    report.config_hash = config_hash(cfg);
    report.train_rows = train_x.size();
    report.test_rows = test_x.size();

    using clock = std::chrono::steady_clock;
    auto seconds = [](clock::time_point a, clock::time_point b) {
        return std::chrono::duration<double>(b - a).count();
    };

    for (const std::string& method : cfg.methods) {
        ExperimentRow row;
        row.method = method;
        std::vector<int> predicted(test_x.size());
        const auto t0 = clock::now();
        clock::time_point t1;
        if (method == "logistic") {
            const auto m = classifiers::train_logistic(train_x, train_y, cfg.logistic);
            t1 = clock::now();
            for (std::size_t i = 0; i < test_x.size(); ++i)
                predicted[i] = classifiers::predict_logistic(m, test_x[i]).label;
        } else if (method == "svm") {
            const auto m = classifiers::train_svm_rbf(train_x, train_y, cfg.svm);
            t1 = clock::now();
            for (std::size_t i = 0; i < test_x.size(); ++i)
                predicted[i] = classifiers::predict_svm(m, test_x[i]).label;
        } else if (method == "forest") {
            const auto m = classifiers::train_forest(train_x, train_y, cfg.forest);
            t1 = clock::now();
            for (std::size_t i = 0; i < test_x.size(); ++i)
                predicted[i] = classifiers::predict_forest(m, test_x[i]).label;
            row.ops = count_rf_ops(m);
        } else {
            const auto m = classifiers::train_stacking(train_x, train_y, cfg.stacking);
            t1 = clock::now();
            for (std::size_t i = 0; i < test_x.size(); ++i)
                predicted[i] = classifiers::predict_stacking(m, test_x[i]).label;
            row.ops = count_rf_ops(m.forest); // the dominant inference cost
        }
        const auto t2 = clock::now();
        row.metrics = compute_metrics(predicted, test_y);
        row.train_seconds = seconds(t0, t1);
        row.eval_seconds = seconds(t1, t2);
        report.rows.push_back(std::move(row));
    }
    return report;
}

namespace {

nlohmann::ordered_json metrics_to_json(const MetricsReport& m) {
    return {{"tp", m.tp},
            {"fp", m.fp},
            {"tn", m.tn},
            {"fn", m.fn},
            {"accuracy", m.accuracy},
            {"absent",
             {{"precision", m.absent.precision},
              {"recall", m.absent.recall},
              {"f1", m.absent.f1},
              {"support", m.absent.support}}},
            {"present",
             {{"precision", m.present.precision},
              {"recall", m.present.recall},
              {"f1", m.present.f1},
              {"support", m.present.support}}},
            {"weighted",
             {{"precision", m.weighted_precision},
              {"recall", m.weighted_recall},
              {"f1", m.weighted_f1}}}};
}

} // namespace

std::string format_report_json(const ExperimentReport& report,
                               bool include_timing) {
    nlohmann::ordered_json j;
    j["feature_set"] = report.feature_set;
    j["grouping"] = report.grouping;
    j["seed"] = report.seed;
    j["config_hash"] = report.config_hash;
    j["train_rows"] = report.train_rows;
    j["test_rows"] = report.test_rows;
    j["results"] = nlohmann::ordered_json::array();
    for (const ExperimentRow& row : report.rows) {
        nlohmann::ordered_json r;
        r["method"] = row.method;
        r["metrics"] = metrics_to_json(row.metrics);
        r["ops"] = row.ops;
        if (include_timing) {
            r["train_seconds"] = row.train_seconds;
            r["eval_seconds"] = row.eval_seconds;
        }
        j["results"].push_back(std::move(r));
    }
    return j.dump(2) + "\n";
}

std::string format_summary_csv(const ExperimentReport& report) {
    std::string out = "Method,Acc.,F1-Score,Prec.,Recall\n";
    for (const ExperimentRow& row : report.rows) {
        out += row.method + "," + io::fmt_double(row.metrics.accuracy) + "," +
               io::fmt_double(row.metrics.present.f1) + "," +
               io::fmt_double(row.metrics.present.precision) + "," +
               io::fmt_double(row.metrics.present.recall) + "\n";
    }
    return out;
}

} // namespace amps::eval
