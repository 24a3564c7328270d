#pragma once

#include <string>
#include <vector>

#include "ivdtr/crossfit.hpp"
#include "ivdtr/dtr.hpp"

namespace ivdtr {

/// Single-stage improvement given an interval [L, U] on the treatment contrast:
/// +1 if L > 0, -1 if U < 0, otherwise the baseline action.
int improve_rule_single(double lower, double upper, int baseline_action);

/// Worst-case gain of flipping the baseline at the final stage:
/// lower(h, -a') - upper(h, a'). Positive means flip.
double relative_contrast_stage_K(const NuisanceSet& nuisance, Features h, int baseline_action,
                                 const Interval& tail);

/// Earlier stages: lower_{-a'}(R + V) - upper_{a'}(R) - lower_{a'}(V), where V is the
/// next-stage relative value. Reduces to the final-stage formula when V == 0.
double relative_contrast_stage_k(const PropensityModels& propensity, const OutcomeModels& reward,
                                 const OutcomeModels& continuation, const OutcomeModels& total,
                                 Features h, int baseline_action);

/// Interval form of the same combination.
inline double flip_contrast(const Interval& flipped_total, const Interval& baseline_reward,
                            const Interval& baseline_continuation) {
    return flipped_total.lower - baseline_reward.upper - baseline_continuation.lower;
}

/// Positive flip contrast flips the baseline; zero keeps it.
inline int improved_action(double flip, int baseline_action) {
    return flip > 0.0 ? -baseline_action : baseline_action;
}

/// Constant-zero outcome models on [0, 0]: the continuation past the last stage.
OutcomeModels zero_outcome_models(double clip = kDefaultClip);

struct RelativeStageEstimate {
    int stage = 0;
    std::vector<int> baseline_action;
    std::vector<double> flip;            // relative contrast, positive means flip
    std::vector<double> keep_value;      // Q(h, a')
    std::vector<double> flip_value;      // Q(h, -a')
    std::vector<double> relative_value;  // Q at the improved action
    std::vector<int> action;             // improved action at the training histories
    std::vector<double> classification_contrast;  // cross-fitted when enabled, else == flip
    int repairs = 0;
    int empty_cells = 0;
    RelativeContrast evaluator;

    double deviation_fraction() const;
};

struct ImproveOptions {
    ProjectionOptions projection;
    StageFitOptions fit;
    CrossfitOptions crossfit;
};

struct ImproveResult {
    std::vector<RelativeStageEstimate> stages;
    Dtr q_rule;  // baseline * sign rule with relative contrasts
    Dtr policy;  // projected onto trees
    std::vector<double> projected_deviation;  // per stage, tree vs baseline at training histories
};

ImproveResult fit_ivimproved(const Dataset& data, const Dtr& baseline, const std::string& baseline_name,
                             const RewardBounds& bounds, const ImproveOptions& options = {});

}  // namespace ivdtr
