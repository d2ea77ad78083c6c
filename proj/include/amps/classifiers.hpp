#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace amps::classifiers {

using Matrix = std::vector<std::vector<double>>; // row-major feature matrix
using Labels = std::vector<int>;                 // 0 = absent, 1 = present

struct Prediction {
    double score = 0.0; // sigmoid score, signed margin, or vote fraction
    int label = 0;
};

// Per-feature standardization fitted on training rows only. Models keep their
// parameters in scaled space and scale raw inputs exactly once inside their
// predict call; the `fitted` flag travels with the model record so a stored
// model is never rescaled a second time.
struct Scaler {
    std::vector<double> mean;
    std::vector<double> stddev; // population; constant features scale by 1
    bool fitted = false;

    static Scaler fit(const Matrix& x);
    std::vector<double> apply(std::span<const double> x) const;
    Matrix apply_all(const Matrix& x) const;
};

// ---------------------------------------------------------------------------
// Logistic
// ---------------------------------------------------------------------------

struct LogisticConfig {
    double threshold = 0.45; // label cut on the sigmoid score, strict >
    double lambda = 1.0;     // L2 strength on weights (bias unpenalized)
    double grad_tol = 1e-6;  // gradient norm at the accepted optimum
    std::size_t max_iter = 200;
};

struct LogisticModel {
    LogisticConfig cfg;
    Scaler scaler;
    std::vector<double> weights; // over scaled features
    double bias = 0.0;

    std::size_t dim() const { return weights.size(); }
};

// L2-regularized maximum likelihood via damped Newton iterations, run until
// the gradient norm falls under cfg.grad_tol. Needs both classes present.
LogisticModel train_logistic(const Matrix& x, const Labels& y,
                             const LogisticConfig& cfg = {});

// score = sigmoid of the linear response; label is present iff score exceeds
// the threshold strictly.
Prediction predict_logistic(const LogisticModel& m, std::span<const double> x);

// ---------------------------------------------------------------------------
// RBF-kernel SVM
// ---------------------------------------------------------------------------

struct SvmConfig {
    double c = 1.0;
    double gamma = 0.5;
    double tol = 1e-3; // largest allowed Karush-Kuhn-Tucker violation
    std::size_t max_iter = 1000000; // pairwise update cap
    std::size_t cache_rows = 1024;  // kernel rows kept in memory
};

struct SvmModel {
    SvmConfig cfg;
    Scaler scaler;
    Matrix support_vectors;     // scaled space
    std::vector<double> coeffs; // alpha_i * y_i per support vector
    double bias = 0.0;
    bool converged = true;

    std::size_t dim() const;
};

// Soft-margin dual solved by sequential two-variable optimization on the
// maximal violating pair until the violation gap is at most cfg.tol. Hitting
// the iteration cap returns the best iterate with converged = false.
SvmModel train_svm_rbf(const Matrix& x, const Labels& y, const SvmConfig& cfg = {});

// score = signed kernel margin; label is present iff the margin is positive.
Prediction predict_svm(const SvmModel& m, std::span<const double> x);

// ---------------------------------------------------------------------------
// Random forest
// ---------------------------------------------------------------------------

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double p1 = 0.0; // class-present fraction of the node's training rows
    int count = 0;   // training rows that reached the node
};

struct Tree {
    std::vector<TreeNode> nodes; // node 0 is the root
};

struct ForestConfig {
    std::size_t trees = 500;
    std::size_t max_depth = 8;
    std::size_t min_samples = 8; // nodes smaller than this become leaves
    std::size_t features_per_node = 4;
    std::uint64_t seed = 42;
    bool use_gini = false; // entropy gain by default
};

struct ForestModel {
    ForestConfig cfg;
    std::size_t dim = 0;
    std::vector<Tree> trees;
};

struct SplitChoice {
    int feature = -1; // -1 when no candidate improves on the parent
    double threshold = 0.0;
    double gain = 0.0;
};

// The forest's split search, exposed for direct auditing: examines midpoints
// between consecutive sorted unique values of each candidate feature and
// returns the impurity-gain maximizer. Ties keep the earlier candidate
// feature and the lower threshold.
SplitChoice best_split(const Matrix& x, const Labels& y,
                       std::span<const std::size_t> rows,
                       std::span<const std::size_t> features, bool use_gini = false);

// Bagged trees on bootstrap resamples, features_per_node features sampled
// without replacement at every node. All randomness flows from cfg.seed
// through one fixed draw order, so retraining is bit-identical.
ForestModel train_forest(const Matrix& x, const Labels& y, const ForestConfig& cfg = {});

// score = mean leaf probability over the trees (summed in sorted order, so
// tree order cannot perturb it); label is present iff score > 0.5.
Prediction predict_forest(const ForestModel& m, std::span<const double> x);

// ---------------------------------------------------------------------------
// Stacking ensemble
// ---------------------------------------------------------------------------

struct StackingConfig {
    std::size_t folds = 5;
    std::uint64_t seed = 42;
    bool hard_labels = false; // feed meta hard 0/1 votes instead of scores
    LogisticConfig logistic;
    SvmConfig svm;
    ForestConfig forest;
    SvmConfig meta;
};

struct StackingModel {
    StackingConfig cfg;
    LogisticModel logistic;
    SvmModel svm;
    ForestModel forest;
    SvmModel meta; // over the 3 base scores
};

struct StackingDiagnostics {
    std::vector<std::size_t> fold_of; // validation fold of each training row
    Matrix oof;                       // out-of-fold base scores, one row each
};

// Base scores for the meta learner come from models that never saw the row
// (stratified fold split); the deployed base models are then refit on all
// rows. Pass `diag` to capture the fold assignment and meta-training matrix.
StackingModel train_stacking(const Matrix& x, const Labels& y,
                             const StackingConfig& cfg = {},
                             StackingDiagnostics* diag = nullptr);

Prediction predict_stacking(const StackingModel& m, std::span<const double> x);

// The three base scores for one input, in meta-feature column order
// (logistic score, svm margin, forest score).
std::vector<double> stacking_base_scores(const StackingModel& m,
                                         std::span<const double> x);

} // namespace amps::classifiers
