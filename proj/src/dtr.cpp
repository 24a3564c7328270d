#include "ivdtr/dtr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ivdtr {

double WeightedContrast::score(Features h) const {
    const Interval plus = mp_interval(propensity, outcome, h, +1, tail);
    const Interval minus = mp_interval(propensity, outcome, h, -1, tail);
    return weighted_q(plus, lambda) - weighted_q(minus, lambda);
}

int ContrastRule::decide(Features h) const {
    return std::visit([&](const auto& e) { return e.decide(h); }, evaluator);
}

int PolicyStage::decide(Features h) const {
    return std::visit(
        [&](const auto& r) -> int {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, ConstantRule>) {
                return r.action;
            } else {
                return r.decide(h);
            }
        },
        rule);
}

const char* PolicyStage::type_name() const {
    switch (rule.index()) {
        case 0: return "tree";
        case 1: return "contrast_sign";
        default: return "constant";
    }
}

const char* to_string(DtrKind kind) {
    switch (kind) {
        case DtrKind::iv_optimal: return "iv_optimal";
        case DtrKind::iv_improved: return "iv_improved";
        case DtrKind::sra: return "sra";
        case DtrKind::constant: return "constant";
    }
    return "constant";
}

DtrKind dtr_kind_from_string(const std::string& s) {
    if (s == "iv_optimal") return DtrKind::iv_optimal;
    if (s == "iv_improved") return DtrKind::iv_improved;
    if (s == "sra") return DtrKind::sra;
    if (s == "constant") return DtrKind::constant;
    throw Error("unknown policy kind '" + s + "'");
}

Dtr constant_dtr(int stages, int action) {
    require(action == 1 || action == -1, "constant action not in {-1,+1}");
    Dtr d;
    d.kind = DtrKind::constant;
    d.stages.assign(static_cast<std::size_t>(stages), PolicyStage{ConstantRule{action}});
    return d;
}

WeightedContrast StageQEstimate::evaluator() const {
    return WeightedContrast{nuisance.propensity, nuisance.outcome, tail, lambda};
}

std::vector<double> pseudo_outcomes(std::span<const double> rewards,
                                    std::span<const double> next_values,
                                    const Interval* certified) {
    require(rewards.size() == next_values.size(), "pseudo-outcome length mismatch");
    std::vector<double> po(rewards.size());
    for (std::size_t i = 0; i < po.size(); ++i) {
        po[i] = rewards[i] + next_values[i];
        if (certified != nullptr) po[i] = std::clamp(po[i], certified->lower, certified->upper);
    }
    return po;
}

bool is_binary_outcome(std::span<const double> outcomes, const Interval& tail) {
    if (tail.lower != 0.0 || tail.upper != 1.0) return false;
    return std::all_of(outcomes.begin(), outcomes.end(),
                       [](double y) { return y == 0.0 || y == 1.0; });
}

StageQEstimate fit_stage(const Matrix& histories, std::span<const int> z, std::span<const int> a,
                         std::span<const double> outcomes, const Interval& tail, double lambda,
                         const StageFitOptions& options) {
    require(lambda >= 0.0 && lambda <= 1.0, "lambda out of range");
    StageQEstimate est;
    est.tail = tail;
    est.lambda = lambda;
    est.binary_outcome = is_binary_outcome(outcomes, tail);
    est.nuisance = fit_stage_nuisance(histories, z, a, outcomes, tail, est.binary_outcome,
                                      options.clip);
    est.intervals = stage_intervals(est.nuisance.propensity, est.nuisance.outcome, histories, tail);

    const std::size_t n = outcomes.size();
    est.q_plus.resize(n);
    est.q_minus.resize(n);
    est.contrast.resize(n);
    est.value.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        est.q_plus[i] = weighted_q(est.intervals.plus[i], lambda);
        est.q_minus[i] = weighted_q(est.intervals.minus[i], lambda);
        est.contrast[i] = est.q_plus[i] - est.q_minus[i];
        est.value[i] = sign_of(est.contrast[i]) > 0 ? est.q_plus[i] : est.q_minus[i];
    }
    return est;
}

void check_rewards_within(const Dataset& data, const RewardBounds& bounds) {
    require(bounds.num_stages() == data.num_stages(),
            "reward bounds have " + std::to_string(bounds.num_stages()) +
                " stages but the data has " + std::to_string(data.num_stages()));
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (int k = 0; k < data.num_stages(); ++k) {
            const double r = data[i].stages[static_cast<std::size_t>(k)].reward;
            if (!bounds.stage(k).contains(r, 1e-9)) {
                throw Error("reward r" + std::to_string(k + 1) + " at row " +
                            std::to_string(i + 1) + " outside declared bounds [" +
                            std::to_string(bounds.stage(k).lower) + ", " +
                            std::to_string(bounds.stage(k).upper) + "]");
            }
        }
    }
}

BackwardResult backward_induct(const Dataset& data, const RewardBounds& bounds,
                               const WeightSpec& lambda, const StageFitOptions& options) {
    const int K = data.num_stages();
    lambda.validate(K);
    check_rewards_within(data, bounds);

    BackwardResult out;
    out.stages.resize(static_cast<std::size_t>(K));
    std::vector<double> next_value(data.size(), 0.0);
    for (int k = K - 1; k >= 0; --k) {
        const Interval tail = bounds.tail(k);
        const auto rewards = data.rewards(k);
        const auto po = pseudo_outcomes(rewards, next_value, &tail);
        const Matrix h = data.histories(k);
        out.stages[static_cast<std::size_t>(k)] =
            fit_stage(h, data.instruments(k), data.actions(k), po, tail, lambda.at(k), options);
        out.stages[static_cast<std::size_t>(k)].stage = k;
        next_value = out.stages[static_cast<std::size_t>(k)].value;
    }

    out.q_rule.kind = DtrKind::iv_optimal;
    out.q_rule.lambda = lambda;
    for (const auto& st : out.stages) {
        out.q_rule.stages.push_back(PolicyStage{ContrastRule{st.evaluator()}});
    }
    return out;
}

TreeFit project_stage(const Matrix& histories, std::span<const double> contrast,
                      const ProjectionOptions& options) {
    std::vector<int> labels(contrast.size());
    std::vector<double> weights(contrast.size());
    for (std::size_t i = 0; i < contrast.size(); ++i) {
        labels[i] = sign_of(contrast[i]);
        weights[i] = std::abs(contrast[i]);
    }
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    return fit_weighted_tree(histories, labels, weights, options.depth,
                             options.min_leaf_fraction * total);
}

Dtr project_policy(const std::vector<StageQEstimate>& stages, const Dataset& data,
                   const ProjectionOptions& options, const WeightSpec& lambda) {
    require(static_cast<int>(stages.size()) == data.num_stages(),
            "stage estimates do not match the dataset");
    Dtr d;
    d.kind = DtrKind::iv_optimal;
    d.lambda = lambda;
    for (int k = 0; k < data.num_stages(); ++k) {
        const auto& st = stages[static_cast<std::size_t>(k)];
        require(st.size() == data.size(), "stage estimate size does not match the dataset");
        d.stages.push_back(PolicyStage{project_stage(data.histories(k), st.contrast, options).tree});
    }
    return d;
}

}  // namespace ivdtr
