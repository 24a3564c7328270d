#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ivdtr/data.hpp"
#include "ivdtr/dtr.hpp"

namespace ivdtr {

using ContrastFunction = std::function<double(Features)>;
/// Fits a stage contrast on the given training rows.
using StageFitFn = std::function<ContrastFunction(std::span<const std::size_t> train_rows)>;

struct CrossfitContrasts {
    std::vector<double> contrast;  // contrast[i] from the model fit without batch_of[i]
    BatchAssignment batches;
    std::vector<ContrastFunction> fold_models;  // fold_models[j] was fit on all batches but j
};

inline constexpr std::size_t kMinBatchSize = 10;

/// Throws unless every batch would hold at least kMinBatchSize trajectories.
void check_crossfit_batches(std::size_t n, int num_batches);

CrossfitContrasts crossfit_stage_contrasts(const Matrix& histories, const BatchAssignment& batches,
                                           const StageFitFn& fit);

struct CrossfitOptions {
    int num_batches = 2;  // 0 or 1 disables cross-fitting
    std::uint64_t seed = 1;
};

struct CrossfitResult {
    Dtr policy;
    BackwardResult full_sample;
    std::vector<CrossfitContrasts> stages;  // empty when cross-fitting is disabled
};

/// Step I on the full sample for value propagation; Step II weights and labels
/// from cross-fitted stage contrasts.
CrossfitResult fit_ivoptimal_crossfit(const Dataset& data, const RewardBounds& bounds,
                                      const WeightSpec& lambda, const ProjectionOptions& projection,
                                      const CrossfitOptions& crossfit,
                                      const StageFitOptions& options = {});

}  // namespace ivdtr
