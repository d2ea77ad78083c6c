#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "amps/common.hpp"

namespace amps::io {

// Shortest decimal form that parses back to the same double. Keeps CSV and
// JSON output stable across runs and faithful on reload.
inline std::string fmt_double(double v) {
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    return buf;
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(ErrorCategory::io, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// Write-to-temp then rename, so readers never observe a half-written file.
inline void atomic_write_text(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) fail(ErrorCategory::io, "cannot write " + tmp.string());
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!f) fail(ErrorCategory::io, "short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) fail(ErrorCategory::io, "cannot move " + tmp.string() + " into place: " + ec.message());
}

} // namespace amps::io
