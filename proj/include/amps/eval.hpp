#pragma once

#include "amps/classifiers.hpp"
#include "amps/dataset.hpp"
#include "amps/features.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace amps::eval {

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

struct SplitSpec {
    double test_fraction = 0.2;
    std::size_t folds = 5;
    std::uint64_t seed = 42;
    enum class Grouping { by_recording, by_window } grouping = Grouping::by_recording;
};

const char* grouping_name(SplitSpec::Grouping g);

struct SplitIndices {
    std::vector<std::size_t> train; // row indices, ascending
    std::vector<std::size_t> test;
};

// Core split: rows sharing a group id move together (grouping by_window puts
// every row in its own group). Groups are ordered by their positive rate and
// sampled by error diffusion, so the test partition matches the requested
// fraction to within one group and mirrors the rate distribution.
SplitIndices split_rows(std::span<const std::string> group_ids,
                        std::span<const int> labels, const SplitSpec& spec);

std::pair<dataset::LabeledDataset, dataset::LabeledDataset>
split_windows(const dataset::LabeledDataset& ds, const SplitSpec& spec);

std::pair<features::FeatureTable, features::FeatureTable>
split_features(const features::FeatureTable& table, const SplitSpec& spec);

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0; // rows whose true label is this class
};

struct MetricsReport {
    std::size_t tp = 0; // predicted present, truly present
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;
    double accuracy = 0.0;
    ClassMetrics absent;
    ClassMetrics present; // the positive class for single-row summaries
    double weighted_precision = 0.0;
    double weighted_recall = 0.0;
    double weighted_f1 = 0.0;

    std::size_t total() const { return tp + fp + tn + fn; }
};

// Confusion counts and the derived rates; a ratio with a zero denominator is
// reported as 0, including F1 when precision + recall is 0.
MetricsReport compute_metrics(const std::vector<int>& predicted,
                              const std::vector<int>& actual);

// Field-wise arithmetic mean of the rate metrics; confusion counts and
// supports are summed across the inputs.
MetricsReport mean_metrics(const std::vector<MetricsReport>& reports);

// ---------------------------------------------------------------------------
// Cross-validation
// ---------------------------------------------------------------------------

struct FoldAssignment {
    std::vector<std::size_t> fold_of_row;
    std::size_t folds = 0;
};

// Grouped, rate-stratified fold assignment; per-fold group counts differ by
// at most one. Requires folds <= group count.
FoldAssignment assign_folds(std::span<const std::string> group_ids,
                            std::span<const int> labels, std::size_t folds,
                            std::uint64_t seed);

// Trains on each fold's complement and predicts its validation rows.
using Trainer = std::function<std::vector<int>(
    const classifiers::Matrix& train_x, const classifiers::Labels& train_y,
    const classifiers::Matrix& validate_x)>;

struct CvResult {
    std::vector<MetricsReport> fold_reports;
    MetricsReport mean;
    FoldAssignment assignment;
};

CvResult kfold_cv(const classifiers::Matrix& x, const classifiers::Labels& y,
                  std::span<const std::string> group_ids, std::size_t folds,
                  std::uint64_t seed, const Trainer& trainer);

// ---------------------------------------------------------------------------
// Grid search
// ---------------------------------------------------------------------------

struct GridRow {
    std::string name; // human-readable parameter description
    MetricsReport metrics;
};

struct GridSearchResult {
    std::size_t best_index = 0;
    std::vector<GridRow> table; // one row per grid point, in grid order
};

// Exhaustive evaluation of every named grid point. The winner has the best
// positive-class F1; ties fall to higher accuracy, then earliest grid order.
GridSearchResult grid_search(
    const std::vector<std::string>& names,
    const std::function<MetricsReport(std::size_t)>& evaluate);

// Flat table of the full search, one line per grid point, for persisting
// next to the chosen parameters.
std::string format_grid_csv(const GridSearchResult& result);

// ---------------------------------------------------------------------------
// Operation counts
// ---------------------------------------------------------------------------

// Worst-case comparison count for one forest inference:
// trees * max_depth * features_per_node, in exact integer arithmetic.
std::uint64_t count_rf_ops(std::uint64_t trees, std::uint64_t max_depth,
                           std::uint64_t features_per_node);
std::uint64_t count_rf_ops(const classifiers::ForestModel& m);

// Comparisons along the decision paths alone: trees * max_depth.
std::uint64_t count_rf_path_ops(std::uint64_t trees, std::uint64_t max_depth);

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    std::string feature_set = "amps"; // "amps" or "mfcc"; labels the report
    std::vector<std::string> methods{"logistic", "svm", "forest", "stacking"};
    SplitSpec split;
    classifiers::LogisticConfig logistic;
    classifiers::SvmConfig svm;
    classifiers::ForestConfig forest;
    classifiers::StackingConfig stacking;
};

struct ExperimentRow {
    std::string method;
    MetricsReport metrics;
    std::uint64_t ops = 0; // worst-case comparisons for tree-based methods
    double train_seconds = 0.0;
    double eval_seconds = 0.0;
};

struct ExperimentReport {
    std::string feature_set;
    std::string grouping;
    std::uint64_t seed = 0;
    std::string config_hash; // canonical-config digest, hex
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;
    std::vector<ExperimentRow> rows; // one per requested method
};

// Canonical one-line rendering of every configuration field; equal configs
// produce equal strings, and the hash in reports digests this string.
std::string canonical_config_string(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

// Splits the table, trains each requested method on the training partition
// only, and scores the held-out rows.
ExperimentReport run_experiment(const features::FeatureTable& table,
                                const ExperimentConfig& cfg);

// Machine-readable report. Timing fields are real measurements and vary run
// to run, so identity checks use include_timing = false.
std::string format_report_json(const ExperimentReport& report,
                               bool include_timing = true);

// Summary table, one line per method: Method, Acc., F1-Score, Prec., Recall.
std::string format_summary_csv(const ExperimentReport& report);

// Column extraction helpers for feeding classifiers from a feature table.
classifiers::Matrix feature_matrix(const features::FeatureTable& table);
classifiers::Labels feature_labels(const features::FeatureTable& table);
std::vector<std::string> feature_groups(const features::FeatureTable& table);

} // namespace amps::eval
