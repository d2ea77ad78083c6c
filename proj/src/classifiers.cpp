#include "amps/classifiers.hpp"

#include "amps/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <list>
#include <numeric>
#include <random>
#include <unordered_map>
#include <utility>

namespace amps::classifiers {

namespace {

constexpr double kBoxEps = 1e-12;

void check_training_input(const Matrix& x, const Labels& y,
                          bool need_both_classes = true) {
    if (x.empty()) fail(ErrorCategory::data, "training set is empty");
    if (x.size() != y.size())
        fail(ErrorCategory::data, "feature rows and labels differ in count");
    const std::size_t d = x.front().size();
    if (d == 0) fail(ErrorCategory::data, "feature rows are empty");
    for (const auto& row : x) {
        if (row.size() != d) fail(ErrorCategory::data, "ragged feature matrix");
        for (double v : row)
            if (!std::isfinite(v))
                fail(ErrorCategory::data, "non-finite feature value");
    }
    bool has0 = false;
    bool has1 = false;
    for (int v : y) {
        if (v == 0) has0 = true;
        else if (v == 1) has1 = true;
        else fail(ErrorCategory::data, "labels must be 0 or 1");
    }
    if (need_both_classes && !(has0 && has1))
        fail(ErrorCategory::data, "training set must contain both classes");
}

void check_predict_input(std::span<const double> x, std::size_t dim) {
    if (x.size() != dim)
        fail(ErrorCategory::model, "input dimension does not match the model");
    for (double v : x)
        if (!std::isfinite(v))
            fail(ErrorCategory::model, "non-finite value in prediction input");
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + exp(-m)) without overflow for large |m|.
double softplus_neg(double m) {
    if (m >= 0.0) return std::log1p(std::exp(-m));
    return -m + std::log1p(std::exp(m));
}

// Uniform draw in [0, n) by plain modulo: the mapping from engine output to
// index is pinned down exactly, which keeps trained forests reproducible
// across standard library implementations.
std::size_t bounded(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(n));
}

void fisher_yates(std::vector<std::size_t>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[bounded(rng, i)]);
}

// Cholesky solve of a symmetric positive definite system, with a small
// diagonal bump retried when near-singular curvature breaks factorization.
std::vector<double> solve_spd(std::vector<std::vector<double>> a,
                              std::vector<double> b) {
    const std::size_t n = a.size();
    for (int attempt = 0; attempt < 4; ++attempt) {
        std::vector<std::vector<double>> l(n, std::vector<double>(n, 0.0));
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                double s = a[i][j];
                for (std::size_t k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
                if (i == j) {
                    if (s <= 0.0) { ok = false; break; }
                    l[i][i] = std::sqrt(s);
                } else {
                    l[i][j] = s / l[j][j];
                }
            }
        }
        if (!ok) {
            const double bump = 1e-10 * std::pow(10.0, attempt);
            for (std::size_t i = 0; i < n; ++i) a[i][i] += bump;
            continue;
        }
        // forward then backward substitution
        std::vector<double> z(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = b[i];
            for (std::size_t k = 0; k < i; ++k) s -= l[i][k] * z[k];
            z[i] = s / l[i][i];
        }
        std::vector<double> out(n);
        for (std::size_t ii = n; ii > 0; --ii) {
            const std::size_t i = ii - 1;
            double s = z[i];
            for (std::size_t k = i + 1; k < n; ++k) s -= l[k][i] * out[k];
            out[i] = s / l[i][i];
        }
        return out;
    }
    fail(ErrorCategory::internal, "curvature matrix is not positive definite");
}

} // namespace

// ---------------------------------------------------------------------------
// Scaler
// ---------------------------------------------------------------------------

Scaler Scaler::fit(const Matrix& x) {
    Scaler s;
    if (x.empty()) fail(ErrorCategory::data, "cannot fit a scaler on no rows");
    const std::size_t n = x.size();
    const std::size_t d = x.front().size();
    s.mean.assign(d, 0.0);
    s.stddev.assign(d, 1.0);
    for (const auto& row : x)
        for (std::size_t j = 0; j < d; ++j) s.mean[j] += row[j];
    for (std::size_t j = 0; j < d; ++j) s.mean[j] /= static_cast<double>(n);
    std::vector<double> sq(d, 0.0);
    for (const auto& row : x)
        for (std::size_t j = 0; j < d; ++j) {
            const double c = row[j] - s.mean[j];
            sq[j] += c * c;
        }
    for (std::size_t j = 0; j < d; ++j) {
        const double sd = std::sqrt(sq[j] / static_cast<double>(n));
        s.stddev[j] = sd > 1e-12 ? sd : 1.0; // constant feature: shift only
    }
    s.fitted = true;
    return s;
}

std::vector<double> Scaler::apply(std::span<const double> x) const {
    if (!fitted) fail(ErrorCategory::model, "scaler was never fitted");
    if (x.size() != mean.size())
        fail(ErrorCategory::model, "input dimension does not match the scaler");
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j)
        out[j] = (x[j] - mean[j]) / stddev[j];
    return out;
}

Matrix Scaler::apply_all(const Matrix& x) const {
    Matrix out;
    out.reserve(x.size());
    for (const auto& row : x) out.push_back(apply(row));
    return out;
}

// ---------------------------------------------------------------------------
// Logistic
// ---------------------------------------------------------------------------

LogisticModel train_logistic(const Matrix& x, const Labels& y,
                             const LogisticConfig& cfg) {
    if (cfg.lambda < 0.0 || cfg.grad_tol <= 0.0 || cfg.max_iter == 0 ||
        !(cfg.threshold >= 0.0 && cfg.threshold <= 1.0))
        fail(ErrorCategory::config, "invalid logistic configuration");
    check_training_input(x, y);

    LogisticModel m;
    m.cfg = cfg;
    m.scaler = Scaler::fit(x);
    const Matrix xs = m.scaler.apply_all(x);
    const std::size_t n = xs.size();
    const std::size_t d = xs.front().size();

    // Parameter vector: d weights then the bias; only weights are penalized.
    std::vector<double> w(d + 1, 0.0);

    auto response = [&](const std::vector<double>& p, std::size_t i) {
        double z = p[d];
        for (std::size_t j = 0; j < d; ++j) z += p[j] * xs[i][j];
        return z;
    };
    auto objective = [&](const std::vector<double>& p) {
        double f = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double z = response(p, i);
            f += softplus_neg(y[i] == 1 ? z : -z);
        }
        double reg = 0.0;
        for (std::size_t j = 0; j < d; ++j) reg += p[j] * p[j];
        return f + 0.5 * cfg.lambda * reg;
    };

    double f_cur = objective(w);
    bool converged = false;
    for (std::size_t iter = 0; iter < cfg.max_iter; ++iter) {
        std::vector<double> g(d + 1, 0.0);
        std::vector<std::vector<double>> h(d + 1, std::vector<double>(d + 1, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(response(w, i));
            const double r = p - (y[i] == 1 ? 1.0 : 0.0);
            const double c = p * (1.0 - p);
            for (std::size_t j = 0; j < d; ++j) {
                g[j] += r * xs[i][j];
                for (std::size_t k = 0; k <= j; ++k)
                    h[j][k] += c * xs[i][j] * xs[i][k];
                h[d][j] += c * xs[i][j];
            }
            g[d] += r;
            h[d][d] += c;
        }
        for (std::size_t j = 0; j < d; ++j) {
            g[j] += cfg.lambda * w[j];
            h[j][j] += cfg.lambda;
        }
        for (std::size_t j = 0; j <= d; ++j)
            for (std::size_t k = j + 1; k <= d; ++k) h[j][k] = h[k][j];

        double gnorm = 0.0;
        for (double v : g) gnorm += v * v;
        gnorm = std::sqrt(gnorm);
        if (gnorm <= cfg.grad_tol) { converged = true; break; }

        std::vector<double> neg_g(d + 1);
        for (std::size_t j = 0; j <= d; ++j) neg_g[j] = -g[j];
        const std::vector<double> step = solve_spd(h, neg_g);

        double slope = 0.0; // directional derivative, negative for a descent step
        for (std::size_t j = 0; j <= d; ++j) slope += g[j] * step[j];
        double eta = 1.0;
        std::vector<double> trial(d + 1);
        while (true) {
            for (std::size_t j = 0; j <= d; ++j) trial[j] = w[j] + eta * step[j];
            const double f_trial = objective(trial);
            if (f_trial <= f_cur + 1e-4 * eta * slope) {
                w = trial;
                f_cur = f_trial;
                break;
            }
            eta *= 0.5;
            if (eta < 1e-12)
                fail(ErrorCategory::internal,
                     "logistic optimizer cannot make progress");
        }
    }
    // The objective is strictly convex, so the damped steps always get here;
    // a cap hit means the gradient tolerance was never certified.
    if (!converged)
        fail(ErrorCategory::internal, "logistic optimizer hit the iteration cap");

    m.weights.assign(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(d));
    m.bias = w[d];
    return m;
}

Prediction predict_logistic(const LogisticModel& m, std::span<const double> x) {
    check_predict_input(x, m.dim());
    const std::vector<double> xs = m.scaler.apply(x);
    double z = m.bias;
    for (std::size_t j = 0; j < xs.size(); ++j) z += m.weights[j] * xs[j];
    Prediction p;
    p.score = sigmoid(z);
    p.label = p.score > m.cfg.threshold ? 1 : 0;
    return p;
}

// ---------------------------------------------------------------------------
// RBF-kernel SVM
// ---------------------------------------------------------------------------

namespace {

double rbf(std::span<const double> a, std::span<const double> b, double gamma) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double dd = a[j] - b[j];
        s += dd * dd;
    }
    return std::exp(-gamma * s);
}

// Least-recently-used store of full kernel rows; bounds memory to
// cache_rows * n doubles no matter how many rows the optimizer touches.
class KernelRowCache {
public:
    KernelRowCache(const Matrix& xs, double gamma, std::size_t cap)
        : xs_(xs), gamma_(gamma), cap_(std::max<std::size_t>(cap, 2)) {}

    const std::vector<double>& row(std::size_t i) {
        auto it = index_.find(i);
        if (it != index_.end()) {
            rows_.splice(rows_.begin(), rows_, it->second);
            return it->second->second;
        }
        if (rows_.size() >= cap_) {
            index_.erase(rows_.back().first);
            rows_.pop_back();
        }
        std::vector<double> k(xs_.size());
        for (std::size_t j = 0; j < xs_.size(); ++j)
            k[j] = rbf(xs_[i], xs_[j], gamma_);
        rows_.emplace_front(i, std::move(k));
        index_[i] = rows_.begin();
        return rows_.front().second;
    }

private:
    const Matrix& xs_;
    double gamma_;
    std::size_t cap_;
    std::list<std::pair<std::size_t, std::vector<double>>> rows_;
    std::unordered_map<std::size_t, decltype(rows_)::iterator> index_;
};

} // namespace

std::size_t SvmModel::dim() const {
    return scaler.mean.size();
}

SvmModel train_svm_rbf(const Matrix& x, const Labels& y, const SvmConfig& cfg) {
    if (cfg.c <= 0.0 || cfg.gamma <= 0.0 || cfg.tol <= 0.0 || cfg.max_iter == 0)
        fail(ErrorCategory::config, "invalid svm configuration");
    check_training_input(x, y);

    SvmModel m;
    m.cfg = cfg;
    m.scaler = Scaler::fit(x);
    const Matrix xs = m.scaler.apply_all(x);
    const std::size_t n = xs.size();

    std::vector<double> ys(n);
    for (std::size_t i = 0; i < n; ++i) ys[i] = y[i] == 1 ? 1.0 : -1.0;

    const double c = cfg.c;
    std::vector<double> alpha(n, 0.0);
    // Gradient of the dual objective; -ys[i]*grad[i] orders the violations.
    std::vector<double> grad(n, -1.0);
    KernelRowCache cache(xs, cfg.gamma, cfg.cache_rows);

    auto in_up = [&](std::size_t i) {
        return ys[i] > 0.0 ? alpha[i] < c - kBoxEps : alpha[i] > kBoxEps;
    };
    auto in_low = [&](std::size_t i) {
        return ys[i] > 0.0 ? alpha[i] > kBoxEps : alpha[i] < c - kBoxEps;
    };

    bool converged = false;
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t iter = 0; iter < cfg.max_iter; ++iter) {
        // Maximal violating pair.
        std::size_t i = n;
        std::size_t j = n;
        double up = -std::numeric_limits<double>::infinity();
        double low = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < n; ++k) {
            const double v = -ys[k] * grad[k];
            if (in_up(k) && v > up) { up = v; i = k; }
            if (in_low(k) && v < low) { low = v; j = k; }
        }
        gap = up - low;
        if (i == n || j == n || gap <= cfg.tol) {
            converged = true;
            break;
        }

        const std::vector<double>& ki = cache.row(i);
        const double kjj = cache.row(j)[j];
        double eta = ki[i] + kjj - 2.0 * ki[j];
        if (eta <= 0.0) eta = 1e-12;

        const double s = ys[i] * ys[j];
        const double ai_old = alpha[i];
        const double aj_old = alpha[j];
        double lo;
        double hi;
        if (s < 0.0) {
            lo = std::max(0.0, aj_old - ai_old);
            hi = std::min(c, c + aj_old - ai_old);
        } else {
            lo = std::max(0.0, ai_old + aj_old - c);
            hi = std::min(c, ai_old + aj_old);
        }
        // ys[k]*grad[k] is the prediction error u_k - y_k of the current dual
        // iterate, so this is the classic two-variable closed-form step.
        double aj = aj_old + ys[j] * (ys[i] * grad[i] - ys[j] * grad[j]) / eta;
        aj = std::clamp(aj, lo, hi);
        const double ai = ai_old + s * (aj_old - aj);
        if (std::abs(aj - aj_old) < 1e-16 && std::abs(ai - ai_old) < 1e-16)
            break; // boxed in: no further progress possible on any pair
        alpha[i] = ai;
        alpha[j] = aj;

        const std::vector<double>& kj = cache.row(j);
        const double di = ai - ai_old;
        const double dj = aj - aj_old;
        for (std::size_t k = 0; k < n; ++k)
            grad[k] += ys[k] * (ys[i] * ki[k] * di + ys[j] * kj[k] * dj);
    }

    if (!converged)
        std::cerr << "svm: optimizer stopped before reaching tolerance (gap="
                  << gap << ")\n";
    m.converged = converged;

    // Bias from rows strictly inside the box, where the margin is exactly 1;
    // with none available, the midpoint of the violation bounds.
    double bias_sum = 0.0;
    std::size_t bias_count = 0;
    double up = -std::numeric_limits<double>::infinity();
    double low = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        const double v = -ys[k] * grad[k];
        if (alpha[k] > kBoxEps && alpha[k] < c - kBoxEps) {
            bias_sum += v;
            ++bias_count;
        }
        if (in_up(k)) up = std::max(up, v);
        if (in_low(k)) low = std::min(low, v);
    }
    m.bias = bias_count > 0 ? bias_sum / static_cast<double>(bias_count)
                            : 0.5 * (up + low);

    for (std::size_t k = 0; k < n; ++k) {
        if (alpha[k] > kBoxEps) {
            m.support_vectors.push_back(xs[k]);
            m.coeffs.push_back(alpha[k] * ys[k]);
        }
    }
    return m;
}

Prediction predict_svm(const SvmModel& m, std::span<const double> x) {
    check_predict_input(x, m.dim());
    const std::vector<double> xs = m.scaler.apply(x);
    double margin = m.bias;
    for (std::size_t k = 0; k < m.support_vectors.size(); ++k)
        margin += m.coeffs[k] * rbf(m.support_vectors[k], xs, m.cfg.gamma);
    Prediction p;
    p.score = margin;
    p.label = margin > 0.0 ? 1 : 0;
    return p;
}

// ---------------------------------------------------------------------------
// Random forest
// ---------------------------------------------------------------------------

namespace {

double impurity(std::size_t n1, std::size_t n, bool use_gini) {
    if (n == 0) return 0.0;
    const double p = static_cast<double>(n1) / static_cast<double>(n);
    const double q = 1.0 - p;
    if (use_gini) return 1.0 - p * p - q * q;
    double h = 0.0;
    if (p > 0.0) h -= p * std::log2(p);
    if (q > 0.0) h -= q * std::log2(q);
    return h;
}

} // namespace

SplitChoice best_split(const Matrix& x, const Labels& y,
                       std::span<const std::size_t> rows,
                       std::span<const std::size_t> features, bool use_gini) {
    SplitChoice best;
    const std::size_t n = rows.size();
    if (n < 2) return best;
    std::size_t n1 = 0;
    for (std::size_t r : rows) n1 += static_cast<std::size_t>(y[r] == 1);
    const double parent = impurity(n1, n, use_gini);

    std::vector<std::pair<double, int>> vals(n);
    for (std::size_t f : features) {
        for (std::size_t i = 0; i < n; ++i)
            vals[i] = {x[rows[i]][f], y[rows[i]]};
        std::sort(vals.begin(), vals.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        std::size_t left1 = 0;
        for (std::size_t i = 1; i < n; ++i) {
            left1 += static_cast<std::size_t>(vals[i - 1].second == 1);
            if (vals[i].first <= vals[i - 1].first) continue; // not a boundary
            const std::size_t nl = i;
            const std::size_t nr = n - i;
            const double child =
                (static_cast<double>(nl) * impurity(left1, nl, use_gini) +
                 static_cast<double>(nr) * impurity(n1 - left1, nr, use_gini)) /
                static_cast<double>(n);
            const double gain = parent - child;
            // A strict margin keeps the earliest candidate on ties, so the
            // earlier sampled feature and the lower threshold win.
            if (gain > best.gain + 1e-12) {
                best.feature = static_cast<int>(f);
                best.threshold = 0.5 * (vals[i - 1].first + vals[i].first);
                best.gain = gain;
            }
        }
    }
    return best;
}

namespace {

struct TreeBuilder {
    const Matrix& x;
    const Labels& y;
    const ForestConfig& cfg;
    std::mt19937_64& rng;
    std::size_t dim;
    Tree tree;
    std::vector<std::size_t> feature_pool;

    int build(std::vector<std::size_t> rows, std::size_t depth) {
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        const std::size_t n = rows.size();
        std::size_t n1 = 0;
        for (std::size_t r : rows) n1 += static_cast<std::size_t>(y[r] == 1);
        tree.nodes[id].count = static_cast<int>(n);
        tree.nodes[id].p1 = static_cast<double>(n1) / static_cast<double>(n);

        const bool pure = n1 == 0 || n1 == n;
        if (pure || depth >= cfg.max_depth || n < cfg.min_samples)
            return id;

        // Sample distinct candidate features by partial shuffle.
        const std::size_t m = std::min(cfg.features_per_node, dim);
        std::iota(feature_pool.begin(), feature_pool.end(), std::size_t{0});
        for (std::size_t k = 0; k < m; ++k)
            std::swap(feature_pool[k],
                      feature_pool[k + bounded(rng, dim - k)]);
        const SplitChoice split = best_split(
            x, y, rows, std::span(feature_pool.data(), m), cfg.use_gini);
        if (split.feature < 0) return id;

        std::vector<std::size_t> left;
        std::vector<std::size_t> right;
        for (std::size_t r : rows) {
            if (x[r][static_cast<std::size_t>(split.feature)] <= split.threshold)
                left.push_back(r);
            else
                right.push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();
        tree.nodes[id].feature = split.feature;
        tree.nodes[id].threshold = split.threshold;
        const int l = build(std::move(left), depth + 1);
        tree.nodes[id].left = l;
        const int r = build(std::move(right), depth + 1);
        tree.nodes[id].right = r;
        return id;
    }
};

} // namespace

ForestModel train_forest(const Matrix& x, const Labels& y,
                         const ForestConfig& cfg) {
    if (cfg.trees == 0 || cfg.features_per_node == 0 || cfg.min_samples < 2)
        fail(ErrorCategory::config, "invalid forest configuration");
    // Trees degrade gracefully on one class (every root is a pure leaf), so
    // only the labels' domain is checked here.
    check_training_input(x, y, /*need_both_classes=*/false);

    ForestModel m;
    m.cfg = cfg;
    m.dim = x.front().size();
    const std::size_t n = x.size();

    // One master stream hands every tree its own seed up front, so the
    // per-tree randomness is independent of build order.
    std::mt19937_64 master(cfg.seed);
    std::vector<std::uint64_t> seeds(cfg.trees);
    for (auto& s : seeds) s = master();

    m.trees.reserve(cfg.trees);
    for (std::size_t t = 0; t < cfg.trees; ++t) {
        std::mt19937_64 rng(seeds[t]);
        std::vector<std::size_t> boot(n);
        for (auto& r : boot) r = bounded(rng, n);
        TreeBuilder builder{x, y, cfg, rng, m.dim, Tree{},
                            std::vector<std::size_t>(m.dim)};
        builder.build(std::move(boot), 0);
        m.trees.push_back(std::move(builder.tree));
    }
    return m;
}

Prediction predict_forest(const ForestModel& m, std::span<const double> x) {
    check_predict_input(x, m.dim);
    std::vector<double> votes;
    votes.reserve(m.trees.size());
    for (const Tree& t : m.trees) {
        const TreeNode* node = &t.nodes[0];
        while (node->feature >= 0) {
            const int next = x[static_cast<std::size_t>(node->feature)] <=
                                     node->threshold
                                 ? node->left
                                 : node->right;
            node = &t.nodes[static_cast<std::size_t>(next)];
        }
        votes.push_back(node->p1);
    }
    // Summing in value order makes the score exactly invariant to any
    // reordering of the trees.
    std::sort(votes.begin(), votes.end());
    double sum = 0.0;
    for (double v : votes) sum += v;
    Prediction p;
    p.score = sum / static_cast<double>(votes.size());
    p.label = p.score > 0.5 ? 1 : 0;
    return p;
}

// ---------------------------------------------------------------------------
// Stacking ensemble
// ---------------------------------------------------------------------------

namespace {

std::vector<double> base_score_row(const LogisticModel& lg, const SvmModel& sv,
                                   const ForestModel& fo,
                                   std::span<const double> x, bool hard) {
    const Prediction a = predict_logistic(lg, x);
    const Prediction b = predict_svm(sv, x);
    const Prediction c = predict_forest(fo, x);
    if (hard)
        return {static_cast<double>(a.label), static_cast<double>(b.label),
                static_cast<double>(c.label)};
    return {a.score, b.score, c.score};
}

} // namespace

StackingModel train_stacking(const Matrix& x, const Labels& y,
                             const StackingConfig& cfg,
                             StackingDiagnostics* diag) {
    if (cfg.folds < 2) fail(ErrorCategory::config, "stacking needs at least 2 folds");
    check_training_input(x, y);
    const std::size_t n = x.size();

    std::vector<std::size_t> class0;
    std::vector<std::size_t> class1;
    for (std::size_t i = 0; i < n; ++i)
        (y[i] == 1 ? class1 : class0).push_back(i);
    if (class0.size() < cfg.folds || class1.size() < cfg.folds)
        fail(ErrorCategory::data,
             "each class needs at least one row per stacking fold");

    // Fixed draw order from the master stream: class shuffles, then one
    // forest seed per fold, then the final forest seed.
    std::mt19937_64 master(cfg.seed);
    fisher_yates(class0, master);
    fisher_yates(class1, master);
    std::vector<std::uint64_t> fold_seeds(cfg.folds);
    for (auto& s : fold_seeds) s = master();
    const std::uint64_t final_seed = master();

    // Deal each shuffled class round-robin so fold class counts differ by
    // at most one.
    std::vector<std::size_t> fold_of(n);
    for (std::size_t p = 0; p < class0.size(); ++p)
        fold_of[class0[p]] = p % cfg.folds;
    for (std::size_t p = 0; p < class1.size(); ++p)
        fold_of[class1[p]] = p % cfg.folds;

    Matrix oof(n);
    for (std::size_t f = 0; f < cfg.folds; ++f) {
        Matrix xt;
        Labels yt;
        for (std::size_t i = 0; i < n; ++i) {
            if (fold_of[i] != f) {
                xt.push_back(x[i]);
                yt.push_back(y[i]);
            }
        }
        const LogisticModel lg = train_logistic(xt, yt, cfg.logistic);
        const SvmModel sv = train_svm_rbf(xt, yt, cfg.svm);
        ForestConfig fc = cfg.forest;
        fc.seed = fold_seeds[f];
        const ForestModel fo = train_forest(xt, yt, fc);
        for (std::size_t i = 0; i < n; ++i)
            if (fold_of[i] == f)
                oof[i] = base_score_row(lg, sv, fo, x[i], cfg.hard_labels);
    }

    StackingModel m;
    m.cfg = cfg;
    m.meta = train_svm_rbf(oof, y, cfg.meta);
    m.logistic = train_logistic(x, y, cfg.logistic);
    m.svm = train_svm_rbf(x, y, cfg.svm);
    ForestConfig fc = cfg.forest;
    fc.seed = final_seed;
    m.forest = train_forest(x, y, fc);

    if (diag != nullptr) {
        diag->fold_of = std::move(fold_of);
        diag->oof = std::move(oof);
    }
    return m;
}

std::vector<double> stacking_base_scores(const StackingModel& m,
                                         std::span<const double> x) {
    return base_score_row(m.logistic, m.svm, m.forest, x, m.cfg.hard_labels);
}

Prediction predict_stacking(const StackingModel& m, std::span<const double> x) {
    return predict_svm(m.meta, stacking_base_scores(m, x));
}

} // namespace amps::classifiers
