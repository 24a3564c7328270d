#include "ivdtr/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ivdtr {

RewardBounds::RewardBounds(std::vector<Interval> per_stage) : per_stage_(std::move(per_stage)) {
    require(!per_stage_.empty(), "reward bounds need at least one stage");
    for (const auto& b : per_stage_) {
        require(std::isfinite(b.lower) && std::isfinite(b.upper), "reward bounds must be finite");
        require(b.lower <= b.upper, "reward bound lower exceeds upper");
    }
}

Interval RewardBounds::tail(int k) const {
    require(k >= 0 && k <= num_stages(), "stage index out of range");
    Interval t{0.0, 0.0};
    for (int s = k; s < num_stages(); ++s) {
        t.lower += per_stage_[s].lower;
        t.upper += per_stage_[s].upper;
    }
    return t;
}

double RewardBounds::tail_width(int k) const {
    require(k >= 0 && k <= num_stages(), "stage index out of range");
    double w = 0.0;
    for (int s = k; s < num_stages(); ++s) w += per_stage_[s].width();
    return w;
}

WeightSpec WeightSpec::constant(std::vector<double> values) {
    WeightSpec spec{std::move(values), "const"};
    spec.validate(static_cast<int>(spec.per_stage.size()));
    return spec;
}

void WeightSpec::validate(int stages) const {
    require(static_cast<int>(per_stage.size()) == stages, "lambda spec has wrong number of stages");
    for (double v : per_stage) require(v >= 0.0 && v <= 1.0, "lambda out of range");
}

WeightSpec parse_weight_spec(const std::string& text, int stages) {
    if (text == "w" || text == "worst") return WeightSpec::worst(stages);
    if (text == "b" || text == "best") return WeightSpec::best(stages);
    if (text == "m" || text == "minmax") return WeightSpec::minmax(stages);

    WeightSpec spec = WeightSpec::minmax(stages);
    spec.name = "const";
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto p1 = item.find(':');
        const auto p2 = item.find(':', p1 == std::string::npos ? p1 : p1 + 1);
        require(p1 != std::string::npos && p2 != std::string::npos && item.substr(0, p1) == "const",
                "unrecognized lambda spec '" + item + "'");
        int stage = 0;
        double value = 0.0;
        try {
            stage = std::stoi(item.substr(p1 + 1, p2 - p1 - 1));
            value = std::stod(item.substr(p2 + 1));
        } catch (const std::exception&) {
            throw Error("unrecognized lambda spec '" + item + "'");
        }
        require(stage >= 1 && stage <= stages, "lambda stage out of range");
        require(value >= 0.0 && value <= 1.0, "lambda out of range");
        spec.per_stage[static_cast<std::size_t>(stage - 1)] = value;
    }
    return spec;
}

ArmQuantities arm_quantities(const PropensityModels& prop, const OutcomeModels& outcome,
                             Features h, int a) {
    ArmQuantities q;
    q.p_z_plus = prop.prob_z_plus(h);
    for (int z : {-1, 1}) {
        q.p_action[z_index(z)] = prop.prob_action(h, a, z);
        q.mean[z_index(z)] = outcome.mean(h, z, a);
    }
    return q;
}

double psi(const PropensityModels& prop, const OutcomeModels& outcome, Features h, int a, int z,
           double c) {
    return psi(prop.prob_action(h, a, z), outcome.mean(h, z, a), c);
}

BoundEvaluation mp_bounds(const ArmQuantities& q, const Interval& tail) {
    const double pzp = q.p_z_plus;
    const double pzm = 1.0 - pzp;
    const double lo_m = psi(q.p_action[0], q.mean[0], tail.lower);
    const double lo_p = psi(q.p_action[1], q.mean[1], tail.lower);
    const double hi_m = psi(q.p_action[0], q.mean[0], tail.upper);
    const double hi_p = psi(q.p_action[1], q.mean[1], tail.upper);

    BoundEvaluation out;
    out.raw.lower = pzm * lo_m + pzp * std::max(lo_m, lo_p);
    out.raw.upper = pzm * std::min(hi_m, hi_p) + pzp * hi_p;

    out.interval.lower = std::clamp(out.raw.lower, tail.lower, tail.upper);
    out.interval.upper = std::clamp(out.raw.upper, tail.lower, tail.upper);
    if (out.interval.lower > out.interval.upper) {
        const double mid = out.interval.midpoint();
        out.interval = {mid, mid};
        out.repaired = true;
    }
    return out;
}

Interval mp_interval(const PropensityModels& prop, const OutcomeModels& outcome, Features h,
                     int a, const Interval& tail, bool* repaired) {
    require(tail.lower <= tail.upper, "bound range is inverted");
    const auto ev = mp_bounds(arm_quantities(prop, outcome, h, a), tail);
    if (repaired != nullptr) *repaired = ev.repaired;
    return ev.interval;
}

double weighted_q(const Interval& interval, double lambda) {
    require(lambda >= 0.0 && lambda <= 1.0, "lambda out of range");
    return lambda * interval.lower + (1.0 - lambda) * interval.upper;
}

StageIntervals stage_intervals(const PropensityModels& prop, const OutcomeModels& outcome,
                               const Matrix& histories, const Interval& tail) {
    require(tail.lower <= tail.upper, "bound range is inverted");
    const Eigen::Index n = histories.rows();
    StageIntervals out;
    out.plus.resize(static_cast<std::size_t>(n));
    out.minus.resize(static_cast<std::size_t>(n));
    int repairs = 0;
#pragma omp parallel for schedule(static) reduction(+ : repairs)
    for (Eigen::Index i = 0; i < n; ++i) {
        const Features h = row_of(histories, i);
        const auto ep = mp_bounds(arm_quantities(prop, outcome, h, +1), tail);
        const auto em = mp_bounds(arm_quantities(prop, outcome, h, -1), tail);
        out.plus[static_cast<std::size_t>(i)] = ep.interval;
        out.minus[static_cast<std::size_t>(i)] = em.interval;
        repairs += static_cast<int>(ep.repaired) + static_cast<int>(em.repaired);
    }
    out.repairs = repairs;
    return out;
}

namespace serial {

StageIntervals stage_intervals(const PropensityModels& prop, const OutcomeModels& outcome,
                               const Matrix& histories, const Interval& tail) {
    StageIntervals out;
    for (Eigen::Index i = 0; i < histories.rows(); ++i) {
        const Features h = row_of(histories, i);
        bool rp = false;
        bool rm = false;
        out.plus.push_back(mp_interval(prop, outcome, h, +1, tail, &rp));
        out.minus.push_back(mp_interval(prop, outcome, h, -1, tail, &rm));
        out.repairs += static_cast<int>(rp) + static_cast<int>(rm);
    }
    return out;
}

}  // namespace serial

}  // namespace ivdtr
