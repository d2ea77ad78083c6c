#pragma once

#include "amps/classifiers.hpp"

#include <string>
#include <variant>

namespace amps::model_io {

// Bump when the on-disk layout changes; loaders reject other versions.
inline constexpr int kFormatVersion = 1;

enum class ModelKind { logistic, svm_rbf, forest, stacking };

const char* kind_name(ModelKind k);

void save_model(const classifiers::LogisticModel& m, const std::string& path);
void save_model(const classifiers::SvmModel& m, const std::string& path);
void save_model(const classifiers::ForestModel& m, const std::string& path);
void save_model(const classifiers::StackingModel& m, const std::string& path);

// Kind recorded in the file, without loading the parameters.
ModelKind peek_kind(const std::string& path);

classifiers::LogisticModel load_logistic(const std::string& path);
classifiers::SvmModel load_svm(const std::string& path);
classifiers::ForestModel load_forest(const std::string& path);
classifiers::StackingModel load_stacking(const std::string& path);

using AnyModel =
    std::variant<classifiers::LogisticModel, classifiers::SvmModel,
                 classifiers::ForestModel, classifiers::StackingModel>;

AnyModel load_model(const std::string& path);

// Score-and-label for any loaded model kind.
classifiers::Prediction predict_any(const AnyModel& m,
                                    std::span<const double> x);

} // namespace amps::model_io
