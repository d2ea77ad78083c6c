#pragma once

#include <stdexcept>
#include <string>

namespace amps {

// Error categories map 1:1 onto the CLI's machine-parsable failure lines.
enum class ErrorCategory { config, io, data, model, internal };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory cat, const std::string& msg)
        : std::runtime_error(msg), category_(cat) {}

    ErrorCategory category() const { return category_; }

    const char* category_name() const {
        switch (category_) {
        case ErrorCategory::config: return "config";
        case ErrorCategory::io: return "io";
        case ErrorCategory::data: return "data";
        case ErrorCategory::model: return "model";
        case ErrorCategory::internal: return "internal";
        }
        return "internal";
    }

private:
    ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory cat, const std::string& msg) {
    throw Error(cat, msg);
}

} // namespace amps
