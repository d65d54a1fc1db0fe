#pragma once

#include <string>
#include <vector>

namespace reciprosim::cli {

/// Batch front-end. Exit codes: 0 success, 1 runtime failure, 2 config
/// validation error (diagnostic names the offending key).
int run(const std::vector<std::string>& args);

int run(int argc, const char* const* argv);

/// Resolve --preset names against the presets directory next to the
/// executable, then the working directory, then as a literal path.
std::string resolve_preset(const std::string& name);

}  // namespace reciprosim::cli
