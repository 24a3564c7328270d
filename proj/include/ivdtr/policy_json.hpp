#pragma once

#include <string>

#include <json.hpp>

#include "ivdtr/policy.hpp"

namespace ivdtr {

using Json = nlohmann::json;

/// {kind, lambda, baseline, stages: [...]}. Stage types are "tree" (nodes, input_dim),
/// "constant" (label) and "contrast_sign" (evaluator with its fitted models).
Json policy_to_json(const Dtr& policy);
Dtr policy_from_json(const Json& j);

std::string dump_policy(const Dtr& policy, int indent = 2);
Dtr parse_policy(const std::string& text);

Dtr load_policy(const std::string& path);
void save_policy(const Dtr& policy, const std::string& path);

}  // namespace ivdtr
