#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ivdtr/tree.hpp"

namespace ivdtr {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

/// Entry point of the `ivdtr` tool. `args` excludes the program name.
/// Errors go to `err` as a single JSON object and select the exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Names of the history features at `stage` (0-based), e.g. x1_1, a1, r1.
std::vector<std::string> history_feature_names(const std::vector<int>& covariate_dims, int stage);

/// One-line nested description of a tree, e.g. "x1_1 < 0.25 ? (-1) : (+1)".
std::string describe_tree(const TreeRule& tree, const std::vector<std::string>& names);

}  // namespace ivdtr
