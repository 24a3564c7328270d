#pragma once

#include <vector>

#include "ivdtr/data.hpp"
#include "ivdtr/policy.hpp"

namespace ivdtr {

struct StageFitOptions {
    double clip = kDefaultClip;
};

/// Backward-induction output for one stage, evaluated at the training histories.
struct StageQEstimate {
    int stage = 0;
    Interval tail;
    double lambda = 0.5;
    bool binary_outcome = false;
    NuisanceSet nuisance;
    StageIntervals intervals;
    std::vector<double> q_plus;
    std::vector<double> q_minus;
    std::vector<double> contrast;  // q_plus - q_minus
    std::vector<double> value;     // q at sign(contrast), sign(0) = +1

    WeightedContrast evaluator() const;
    std::size_t size() const { return contrast.size(); }
};

/// PO_k = r_k + V_{k+1}, clipped into `certified` when given.
std::vector<double> pseudo_outcomes(std::span<const double> rewards,
                                    std::span<const double> next_values,
                                    const Interval* certified = nullptr);

/// The outcome is treated as Bernoulli iff `tail` is [0, 1] and every outcome is 0 or 1.
bool is_binary_outcome(std::span<const double> outcomes, const Interval& tail);

StageQEstimate fit_stage(const Matrix& histories, std::span<const int> z, std::span<const int> a,
                         std::span<const double> outcomes, const Interval& tail, double lambda,
                         const StageFitOptions& options = {});

struct BackwardResult {
    std::vector<StageQEstimate> stages;  // indexed by stage
    Dtr q_rule;                          // sign-of-contrast rules
};

/// Rejects rewards outside the declared per-stage bounds, naming the row.
void check_rewards_within(const Dataset& data, const RewardBounds& bounds);

BackwardResult backward_induct(const Dataset& data, const RewardBounds& bounds,
                               const WeightSpec& lambda, const StageFitOptions& options = {});

struct ProjectionOptions {
    int depth = 2;
    double min_leaf_fraction = 0.01;
};

/// Weighted classification of sign(contrast) with weights |contrast|, per stage.
TreeFit project_stage(const Matrix& histories, std::span<const double> contrast,
                      const ProjectionOptions& options);

Dtr project_policy(const std::vector<StageQEstimate>& stages, const Dataset& data,
                   const ProjectionOptions& options, const WeightSpec& lambda);

}  // namespace ivdtr
