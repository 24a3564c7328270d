#pragma once

#include <array>
#include <string>
#include <vector>

#include "ivdtr/nuisance.hpp"

namespace ivdtr {

/// Almost-sure reward range per stage, with tail sums over stages t >= k.
class RewardBounds {
public:
    explicit RewardBounds(std::vector<Interval> per_stage);

    int num_stages() const { return static_cast<int>(per_stage_.size()); }
    const Interval& stage(int k) const { return per_stage_.at(static_cast<std::size_t>(k)); }
    const std::vector<Interval>& per_stage() const { return per_stage_; }

    /// [sum_{t>=k} lower_t, sum_{t>=k} upper_t]; k == num_stages() gives [0, 0].
    Interval tail(int k) const;
    /// sum_{t>=k} (upper_t - lower_t).
    double tail_width(int k) const;

private:
    std::vector<Interval> per_stage_;
};

/// Per-stage weight lambda_k in [0, 1] on the lower end of the interval:
/// 1 is worst case, 0 best case, 1/2 min-max.
struct WeightSpec {
    std::vector<double> per_stage;
    std::string name;

    static WeightSpec worst(int stages) { return {std::vector<double>(stages, 1.0), "worst"}; }
    static WeightSpec best(int stages) { return {std::vector<double>(stages, 0.0), "best"}; }
    static WeightSpec minmax(int stages) { return {std::vector<double>(stages, 0.5), "minmax"}; }
    static WeightSpec constant(std::vector<double> values);

    double at(int k) const { return per_stage.at(static_cast<std::size_t>(k)); }
    void validate(int stages) const;
};

/// Accepts w|b|m or a comma-separated list of const:<stage>:<value> (stages 1-based);
/// stages not listed default to 1/2.
WeightSpec parse_weight_spec(const std::string& text, int stages);

/// C * P(A = -a | Z = z, h) + E[Y | h, z, a] * P(A = a | Z = z, h).
inline double psi(double p_action, double mean_outcome, double c) {
    return c * (1.0 - p_action) + mean_outcome * p_action;
}

/// The conditional quantities the bounds need for one action, indexed by z_index.
struct ArmQuantities {
    double p_z_plus = 0.5;
    std::array<double, 2> p_action{};  // P(A = a | Z = z, h)
    std::array<double, 2> mean{};      // E[Y | h, z, a]
};

ArmQuantities arm_quantities(const PropensityModels& prop, const OutcomeModels& outcome,
                             Features h, int a);

double psi(const PropensityModels& prop, const OutcomeModels& outcome, Features h, int a, int z,
           double c);

struct BoundEvaluation {
    Interval interval;
    Interval raw;
    bool repaired = false;  // ends crossed after clipping, collapsed to the midpoint
};

/// Manski-Pepper bounds for a binary instrument coded so that z = +1 is the
/// encouragement arm. Result is clipped into `tail` and ordered.
BoundEvaluation mp_bounds(const ArmQuantities& q, const Interval& tail);

Interval mp_interval(const PropensityModels& prop, const OutcomeModels& outcome, Features h,
                     int a, const Interval& tail, bool* repaired = nullptr);
inline Interval mp_interval(const NuisanceSet& set, Features h, int a, const Interval& tail,
                            bool* repaired = nullptr) {
    return mp_interval(set.propensity, set.outcome, h, a, tail, repaired);
}

/// lambda * lower + (1 - lambda) * upper.
double weighted_q(const Interval& interval, double lambda);

/// Intervals for both actions at every row of `histories`.
struct StageIntervals {
    std::vector<Interval> plus;
    std::vector<Interval> minus;
    int repairs = 0;

    const Interval& at(std::size_t i, int a) const { return a > 0 ? plus[i] : minus[i]; }
};

StageIntervals stage_intervals(const PropensityModels& prop, const OutcomeModels& outcome,
                               const Matrix& histories, const Interval& tail);

namespace serial {
StageIntervals stage_intervals(const PropensityModels& prop, const OutcomeModels& outcome,
                               const Matrix& histories, const Interval& tail);
}

}  // namespace ivdtr
