#pragma once

namespace amps::cli {

// Full command-line entry point: parses arguments, dispatches the chosen
// command, and maps failures to a one-line `error:<category>: <message>`
// stderr report with a category-specific nonzero exit code. Returns the
// process exit code.
int run(int argc, const char* const* argv);

} // namespace amps::cli
