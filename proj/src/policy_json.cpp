#include "ivdtr/policy_json.hpp"

#include <fstream>
#include <sstream>

namespace ivdtr {

namespace {

Json stage_to_json(const PolicyStage& stage);
PolicyStage stage_from_json(const Json& j);

template <typename T>
T get(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) {
        throw Error("malformed policy JSON: missing field '" + std::string(key) + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw Error("malformed policy JSON: bad type for field '" + std::string(key) + "'");
    }
}

Json vector_to_json(const Vector& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Vector vector_from_json(const Json& j) {
    const auto vals = j.get<std::vector<double>>();
    Vector v(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) v[static_cast<Eigen::Index>(i)] = vals[i];
    return v;
}

Json interval_to_json(const Interval& iv) { return Json::array({iv.lower, iv.upper}); }

Interval interval_from_json(const Json& j) {
    if (!j.is_array() || j.size() != 2) throw Error("malformed policy JSON: bad interval");
    return {j[0].get<double>(), j[1].get<double>()};
}

Json logistic_to_json(const LogisticModel& m) {
    return {{"intercept", m.intercept},
            {"coefficients", vector_to_json(m.coefficients)},
            {"iterations", m.info.iterations},
            {"converged", m.info.converged},
            {"gradient_norm", m.info.gradient_norm}};
}

LogisticModel logistic_from_json(const Json& j) {
    LogisticModel m;
    m.intercept = get<double>(j, "intercept");
    m.coefficients = vector_from_json(j.at("coefficients"));
    m.info.iterations = j.value("iterations", 0);
    m.info.converged = j.value("converged", true);
    m.info.gradient_norm = j.value("gradient_norm", 0.0);
    return m;
}

Json linear_to_json(const LinearModel& m) {
    return {{"intercept", m.intercept}, {"coefficients", vector_to_json(m.coefficients)}};
}

LinearModel linear_from_json(const Json& j) {
    LinearModel m;
    m.intercept = get<double>(j, "intercept");
    m.coefficients = vector_from_json(j.at("coefficients"));
    return m;
}

Json propensity_to_json(const PropensityModels& p) {
    return {{"pz", logistic_to_json(p.pz)},
            {"pa_given_z_minus", logistic_to_json(p.pa_given_z[0])},
            {"pa_given_z_plus", logistic_to_json(p.pa_given_z[1])},
            {"empty_arm", {p.empty_arm[0], p.empty_arm[1]}},
            {"clip", p.clip}};
}

PropensityModels propensity_from_json(const Json& j) {
    PropensityModels p;
    p.pz = logistic_from_json(j.at("pz"));
    p.pa_given_z[0] = logistic_from_json(j.at("pa_given_z_minus"));
    p.pa_given_z[1] = logistic_from_json(j.at("pa_given_z_plus"));
    const auto empty = j.at("empty_arm").get<std::vector<bool>>();
    if (empty.size() != 2) throw Error("malformed policy JSON: empty_arm needs 2 entries");
    p.empty_arm = {empty[0], empty[1]};
    p.clip = get<double>(j, "clip");
    return p;
}

const char* outcome_kind_name(OutcomeModel::Kind k) {
    switch (k) {
        case OutcomeModel::Kind::logistic: return "logistic";
        case OutcomeModel::Kind::linear: return "linear";
        case OutcomeModel::Kind::constant: return "constant";
    }
    return "constant";
}

Json outcome_cell_to_json(const OutcomeModel& m) {
    Json j{{"kind", outcome_kind_name(m.kind)}, {"empty_cell", m.empty_cell}};
    switch (m.kind) {
        case OutcomeModel::Kind::logistic: j["model"] = logistic_to_json(m.logistic); break;
        case OutcomeModel::Kind::linear: j["model"] = linear_to_json(m.linear); break;
        case OutcomeModel::Kind::constant: j["value"] = m.constant; break;
    }
    return j;
}

OutcomeModel outcome_cell_from_json(const Json& j) {
    OutcomeModel m;
    const auto kind = get<std::string>(j, "kind");
    m.empty_cell = j.value("empty_cell", false);
    if (kind == "logistic") {
        m.kind = OutcomeModel::Kind::logistic;
        m.logistic = logistic_from_json(j.at("model"));
    } else if (kind == "linear") {
        m.kind = OutcomeModel::Kind::linear;
        m.linear = linear_from_json(j.at("model"));
    } else if (kind == "constant") {
        m.kind = OutcomeModel::Kind::constant;
        m.constant = get<double>(j, "value");
    } else {
        throw Error("malformed policy JSON: unknown outcome model kind '" + kind + "'");
    }
    return m;
}

Json outcomes_to_json(const OutcomeModels& o) {
    Json cells = Json::array();
    for (const auto& c : o.mu) cells.push_back(outcome_cell_to_json(c));
    return {{"cells", cells}, {"range", interval_to_json(o.range)}, {"clip", o.clip}};
}

OutcomeModels outcomes_from_json(const Json& j) {
    OutcomeModels o;
    const auto& cells = j.at("cells");
    if (!cells.is_array() || cells.size() != 4) {
        throw Error("malformed policy JSON: outcome models need 4 cells");
    }
    for (std::size_t c = 0; c < 4; ++c) o.mu[c] = outcome_cell_from_json(cells[c]);
    o.range = interval_from_json(j.at("range"));
    o.clip = get<double>(j, "clip");
    return o;
}

Json evaluator_to_json(const ContrastRule& rule) {
    return std::visit(
        [](const auto& e) -> Json {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, WeightedContrast>) {
                return {{"kind", "weighted"},
                        {"propensity", propensity_to_json(e.propensity)},
                        {"outcome", outcomes_to_json(e.outcome)},
                        {"tail", interval_to_json(e.tail)},
                        {"lambda", e.lambda}};
            } else if constexpr (std::is_same_v<T, LinearContrast>) {
                return {{"kind", "linear"}, {"model", linear_to_json(e.model)}};
            } else {
                return {{"kind", "relative"},
                        {"propensity", propensity_to_json(e.propensity)},
                        {"reward", outcomes_to_json(e.reward)},
                        {"continuation", outcomes_to_json(e.continuation)},
                        {"total", outcomes_to_json(e.total)},
                        {"baseline", stage_to_json(*e.baseline)}};
            }
        },
        rule.evaluator);
}

ContrastRule evaluator_from_json(const Json& j) {
    const auto kind = get<std::string>(j, "kind");
    if (kind == "weighted") {
        WeightedContrast e;
        e.propensity = propensity_from_json(j.at("propensity"));
        e.outcome = outcomes_from_json(j.at("outcome"));
        e.tail = interval_from_json(j.at("tail"));
        e.lambda = get<double>(j, "lambda");
        require(e.lambda >= 0.0 && e.lambda <= 1.0, "lambda out of range");
        return {e};
    }
    if (kind == "linear") return {LinearContrast{linear_from_json(j.at("model"))}};
    if (kind == "relative") {
        RelativeContrast e;
        e.propensity = propensity_from_json(j.at("propensity"));
        e.reward = outcomes_from_json(j.at("reward"));
        e.continuation = outcomes_from_json(j.at("continuation"));
        e.total = outcomes_from_json(j.at("total"));
        e.baseline = std::make_shared<const PolicyStage>(stage_from_json(j.at("baseline")));
        return {e};
    }
    throw Error("malformed policy JSON: unknown evaluator kind '" + kind + "'");
}

Json stage_to_json(const PolicyStage& stage) {
    Json j{{"type", stage.type_name()}};
    std::visit(
        [&](const auto& r) {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, TreeRule>) {
                Json nodes = Json::array();
                for (const auto& n : r.nodes) {
                    nodes.push_back({{"feature", n.feature},
                                     {"threshold", n.threshold},
                                     {"left", n.left},
                                     {"right", n.right},
                                     {"label", n.label}});
                }
                j["nodes"] = nodes;
                j["input_dim"] = r.input_dim;
            } else if constexpr (std::is_same_v<T, ConstantRule>) {
                j["label"] = r.action;
            } else {
                j["evaluator"] = evaluator_to_json(r);
            }
        },
        stage.rule);
    return j;
}

PolicyStage stage_from_json(const Json& j) {
    const auto type = get<std::string>(j, "type");
    if (type == "tree") {
        TreeRule t;
        t.input_dim = get<int>(j, "input_dim");
        const auto& nodes = j.at("nodes");
        if (!nodes.is_array()) throw Error("malformed policy JSON: nodes must be an array");
        for (const auto& nj : nodes) {
            TreeNode n;
            n.feature = get<int>(nj, "feature");
            n.threshold = get<double>(nj, "threshold");
            n.left = get<int>(nj, "left");
            n.right = get<int>(nj, "right");
            n.label = get<int>(nj, "label");
            t.nodes.push_back(n);
        }
        t.validate();
        return {t};
    }
    if (type == "constant") {
        const int label = get<int>(j, "label");
        require(label == 1 || label == -1, "malformed policy JSON: constant label not in {-1,+1}");
        return {ConstantRule{label}};
    }
    if (type == "contrast_sign") return {evaluator_from_json(j.at("evaluator"))};
    throw Error("malformed policy JSON: unknown stage type '" + type + "'");
}

}  // namespace

Json policy_to_json(const Dtr& policy) {
    Json stages = Json::array();
    for (const auto& s : policy.stages) stages.push_back(stage_to_json(s));
    Json j{{"kind", to_string(policy.kind)}, {"stages", stages}};
    j["lambda"] = policy.lambda.per_stage.empty() ? Json(nullptr) : Json(policy.lambda.per_stage);
    if (!policy.lambda.name.empty()) j["lambda_name"] = policy.lambda.name;
    if (!policy.baseline.empty()) j["baseline"] = policy.baseline;
    return j;
}

Dtr policy_from_json(const Json& j) {
    if (!j.is_object()) throw Error("malformed policy JSON: expected an object");
    Dtr d;
    d.kind = dtr_kind_from_string(get<std::string>(j, "kind"));
    const auto& stages = j.at("stages");
    if (!stages.is_array() || stages.empty()) {
        throw Error("malformed policy JSON: stages must be a non-empty array");
    }
    for (const auto& s : stages) d.stages.push_back(stage_from_json(s));
    if (j.contains("lambda") && !j.at("lambda").is_null()) {
        d.lambda.per_stage = j.at("lambda").get<std::vector<double>>();
        d.lambda.validate(d.num_stages());
    }
    d.lambda.name = j.value("lambda_name", std::string{});
    d.baseline = j.value("baseline", std::string{});
    return d;
}

std::string dump_policy(const Dtr& policy, int indent) { return policy_to_json(policy).dump(indent); }

Dtr parse_policy(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(std::string("malformed policy JSON: ") + e.what());
    }
    try {
        return policy_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed policy JSON: ") + e.what());
    }
}

Dtr load_policy(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open policy file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_policy(ss.str());
}

void save_policy(const Dtr& policy, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write policy file '" + path + "'");
    out << dump_policy(policy) << '\n';
}

}  // namespace ivdtr
