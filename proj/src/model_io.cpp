#include "amps/model_io.hpp"

#include "amps/common.hpp"
#include "amps/io_util.hpp"

#include <json.hpp>

#include <cstddef>
#include <string>
#include <utility>

namespace amps::model_io {

namespace {

using nlohmann::json;
using namespace amps::classifiers;

json scaler_to_json(const Scaler& s) {
    return {{"mean", s.mean}, {"stddev", s.stddev}, {"fitted", s.fitted}};
}

Scaler scaler_from_json(const json& j) {
    Scaler s;
    s.mean = j.at("mean").get<std::vector<double>>();
    s.stddev = j.at("stddev").get<std::vector<double>>();
    s.fitted = j.at("fitted").get<bool>();
    if (s.mean.size() != s.stddev.size())
        fail(ErrorCategory::model, "scaler mean and stddev sizes differ");
    return s;
}

json logistic_to_json(const LogisticModel& m) {
    return {{"format_version", kFormatVersion},
            {"kind", kind_name(ModelKind::logistic)},
            {"config",
             {{"threshold", m.cfg.threshold},
              {"lambda", m.cfg.lambda},
              {"grad_tol", m.cfg.grad_tol},
              {"max_iter", m.cfg.max_iter}}},
            {"scaler", scaler_to_json(m.scaler)},
            {"weights", m.weights},
            {"bias", m.bias}};
}

LogisticModel logistic_from_json(const json& j) {
    LogisticModel m;
    const json& c = j.at("config");
    m.cfg.threshold = c.at("threshold").get<double>();
    m.cfg.lambda = c.at("lambda").get<double>();
    m.cfg.grad_tol = c.at("grad_tol").get<double>();
    m.cfg.max_iter = c.at("max_iter").get<std::size_t>();
    m.scaler = scaler_from_json(j.at("scaler"));
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    if (m.weights.size() != m.scaler.mean.size())
        fail(ErrorCategory::model, "logistic weight count does not match scaler");
    return m;
}

json svm_to_json(const SvmModel& m) {
    return {{"format_version", kFormatVersion},
            {"kind", kind_name(ModelKind::svm_rbf)},
            {"config",
             {{"c", m.cfg.c},
              {"gamma", m.cfg.gamma},
              {"tol", m.cfg.tol},
              {"max_iter", m.cfg.max_iter},
              {"cache_rows", m.cfg.cache_rows}}},
            {"scaler", scaler_to_json(m.scaler)},
            {"support_vectors", m.support_vectors},
            {"coeffs", m.coeffs},
            {"bias", m.bias},
            {"converged", m.converged}};
}

SvmModel svm_from_json(const json& j) {
    SvmModel m;
    const json& c = j.at("config");
    m.cfg.c = c.at("c").get<double>();
    m.cfg.gamma = c.at("gamma").get<double>();
    m.cfg.tol = c.at("tol").get<double>();
    m.cfg.max_iter = c.at("max_iter").get<std::size_t>();
    m.cfg.cache_rows = c.at("cache_rows").get<std::size_t>();
    m.scaler = scaler_from_json(j.at("scaler"));
    m.support_vectors = j.at("support_vectors").get<Matrix>();
    m.coeffs = j.at("coeffs").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    m.converged = j.at("converged").get<bool>();
    if (m.support_vectors.size() != m.coeffs.size())
        fail(ErrorCategory::model, "svm support vector and coefficient counts differ");
    for (const auto& sv : m.support_vectors)
        if (sv.size() != m.scaler.mean.size())
            fail(ErrorCategory::model, "svm support vector width does not match scaler");
    return m;
}

json forest_to_json(const ForestModel& m) {
    json trees = json::array();
    for (const Tree& t : m.trees) {
        json nodes = json::array();
        for (const TreeNode& n : t.nodes)
            nodes.push_back(json::array(
                {n.feature, n.threshold, n.left, n.right, n.p1, n.count}));
        trees.push_back(std::move(nodes));
    }
    return {{"format_version", kFormatVersion},
            {"kind", kind_name(ModelKind::forest)},
            {"config",
             {{"trees", m.cfg.trees},
              {"max_depth", m.cfg.max_depth},
              {"min_samples", m.cfg.min_samples},
              {"features_per_node", m.cfg.features_per_node},
              {"seed", m.cfg.seed},
              {"use_gini", m.cfg.use_gini}}},
            {"dim", m.dim},
            {"trees", std::move(trees)}};
}

ForestModel forest_from_json(const json& j) {
    ForestModel m;
    const json& c = j.at("config");
    m.cfg.trees = c.at("trees").get<std::size_t>();
    m.cfg.max_depth = c.at("max_depth").get<std::size_t>();
    m.cfg.min_samples = c.at("min_samples").get<std::size_t>();
    m.cfg.features_per_node = c.at("features_per_node").get<std::size_t>();
    m.cfg.seed = c.at("seed").get<std::uint64_t>();
    m.cfg.use_gini = c.at("use_gini").get<bool>();
    m.dim = j.at("dim").get<std::size_t>();
    for (const json& jt : j.at("trees")) {
        Tree t;
        for (const json& jn : jt) {
            if (!jn.is_array() || jn.size() != 6)
                fail(ErrorCategory::model, "malformed forest node record");
            TreeNode n;
            n.feature = jn[0].get<int>();
            n.threshold = jn[1].get<double>();
            n.left = jn[2].get<int>();
            n.right = jn[3].get<int>();
            n.p1 = jn[4].get<double>();
            n.count = jn[5].get<int>();
            t.nodes.push_back(n);
        }
        if (t.nodes.empty())
            fail(ErrorCategory::model, "forest tree has no nodes");
        const int size = static_cast<int>(t.nodes.size());
        for (const TreeNode& n : t.nodes) {
            if (n.feature >= 0 &&
                (n.feature >= static_cast<int>(m.dim) || n.left < 0 ||
                 n.left >= size || n.right < 0 || n.right >= size))
                fail(ErrorCategory::model, "forest node references are out of range");
        }
        m.trees.push_back(std::move(t));
    }
    if (m.trees.empty())
        fail(ErrorCategory::model, "forest model has no trees");
    return m;
}

json stacking_to_json(const StackingModel& m) {
    return {{"format_version", kFormatVersion},
            {"kind", kind_name(ModelKind::stacking)},
            {"config",
             {{"folds", m.cfg.folds},
              {"seed", m.cfg.seed},
              {"hard_labels", m.cfg.hard_labels}}},
            {"logistic", logistic_to_json(m.logistic)},
            {"svm", svm_to_json(m.svm)},
            {"forest", forest_to_json(m.forest)},
            {"meta", svm_to_json(m.meta)}};
}

void check_envelope(const json& j, ModelKind expected);

StackingModel stacking_from_json(const json& j) {
    StackingModel m;
    const json& c = j.at("config");
    m.cfg.folds = c.at("folds").get<std::size_t>();
    m.cfg.seed = c.at("seed").get<std::uint64_t>();
    m.cfg.hard_labels = c.at("hard_labels").get<bool>();
    check_envelope(j.at("logistic"), ModelKind::logistic);
    check_envelope(j.at("svm"), ModelKind::svm_rbf);
    check_envelope(j.at("forest"), ModelKind::forest);
    check_envelope(j.at("meta"), ModelKind::svm_rbf);
    m.logistic = logistic_from_json(j.at("logistic"));
    m.svm = svm_from_json(j.at("svm"));
    m.forest = forest_from_json(j.at("forest"));
    m.meta = svm_from_json(j.at("meta"));
    // The nested component configs live with the components themselves.
    m.cfg.logistic = m.logistic.cfg;
    m.cfg.svm = m.svm.cfg;
    m.cfg.forest = m.forest.cfg;
    m.cfg.meta = m.meta.cfg;
    return m;
}

ModelKind kind_from_name(const std::string& name) {
    if (name == "logistic") return ModelKind::logistic;
    if (name == "svm_rbf") return ModelKind::svm_rbf;
    if (name == "forest") return ModelKind::forest;
    if (name == "stacking") return ModelKind::stacking;
    fail(ErrorCategory::model, "unknown model kind '" + name + "'");
}

void check_envelope(const json& j, ModelKind expected) {
    if (!j.is_object() || !j.contains("format_version") || !j.contains("kind"))
        fail(ErrorCategory::model, "not a model record");
    const int version = j.at("format_version").get<int>();
    if (version != kFormatVersion)
        fail(ErrorCategory::model,
             "unsupported model format version " + std::to_string(version));
    const ModelKind kind = kind_from_name(j.at("kind").get<std::string>());
    if (kind != expected)
        fail(ErrorCategory::model,
             std::string("model kind is '") + kind_name(kind) + "', expected '" +
                 kind_name(expected) + "'");
}

json parse_model_file(const std::string& path) {
    const std::string text = io::read_text_file(path);
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded())
        fail(ErrorCategory::model, "corrupt model file " + path);
    return j;
}

void write_json(const json& j, const std::string& path) {
    io::atomic_write_text(path, j.dump(2) + "\n");
}

// Translate schema violations surfaced by the JSON library into the model
// error category, keeping amps::Error pass-through intact.
template <typename Fn>
auto guard_json(Fn&& fn, const std::string& path) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error&) {
        throw;
    } catch (const json::exception& e) {
        fail(ErrorCategory::model,
             "corrupt model file " + path + ": " + e.what());
    }
}

} // namespace

const char* kind_name(ModelKind k) {
    switch (k) {
    case ModelKind::logistic: return "logistic";
    case ModelKind::svm_rbf: return "svm_rbf";
    case ModelKind::forest: return "forest";
    case ModelKind::stacking: return "stacking";
    }
    return "unknown";
}

void save_model(const LogisticModel& m, const std::string& path) {
    write_json(logistic_to_json(m), path);
}

void save_model(const SvmModel& m, const std::string& path) {
    write_json(svm_to_json(m), path);
}

void save_model(const ForestModel& m, const std::string& path) {
    write_json(forest_to_json(m), path);
}

void save_model(const StackingModel& m, const std::string& path) {
    write_json(stacking_to_json(m), path);
}

ModelKind peek_kind(const std::string& path) {
    const json j = parse_model_file(path);
    return guard_json(
        [&] {
            if (!j.is_object() || !j.contains("format_version") ||
                !j.contains("kind"))
                fail(ErrorCategory::model, "not a model record: " + path);
            const int version = j.at("format_version").get<int>();
            if (version != kFormatVersion)
                fail(ErrorCategory::model, "unsupported model format version " +
                                               std::to_string(version));
            return kind_from_name(j.at("kind").get<std::string>());
        },
        path);
}

LogisticModel load_logistic(const std::string& path) {
    const json j = parse_model_file(path);
    return guard_json(
        [&] {
            check_envelope(j, ModelKind::logistic);
            return logistic_from_json(j);
        },
        path);
}

SvmModel load_svm(const std::string& path) {
    const json j = parse_model_file(path);
    return guard_json(
        [&] {
            check_envelope(j, ModelKind::svm_rbf);
            return svm_from_json(j);
        },
        path);
}

ForestModel load_forest(const std::string& path) {
    const json j = parse_model_file(path);
    return guard_json(
        [&] {
            check_envelope(j, ModelKind::forest);
            return forest_from_json(j);
        },
        path);
}

StackingModel load_stacking(const std::string& path) {
    const json j = parse_model_file(path);
    return guard_json(
        [&] {
            check_envelope(j, ModelKind::stacking);
            return stacking_from_json(j);
        },
        path);
}

AnyModel load_model(const std::string& path) {
    switch (peek_kind(path)) {
    case ModelKind::logistic: return load_logistic(path);
    case ModelKind::svm_rbf: return load_svm(path);
    case ModelKind::forest: return load_forest(path);
    case ModelKind::stacking: return load_stacking(path);
    }
    fail(ErrorCategory::model, "unknown model kind in " + path);
}

Prediction predict_any(const AnyModel& m, std::span<const double> x) {
    return std::visit(
        [&](const auto& model) {
            using T = std::decay_t<decltype(model)>;
            if constexpr (std::is_same_v<T, LogisticModel>)
                return predict_logistic(model, x);
            else if constexpr (std::is_same_v<T, SvmModel>)
                return predict_svm(model, x);
            else if constexpr (std::is_same_v<T, ForestModel>)
                return predict_forest(model, x);
            else
                return predict_stacking(model, x);
        },
        m);
}

} // namespace amps::model_io
