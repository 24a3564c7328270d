#pragma once

#include <array>
#include <vector>

#include "ivdtr/common.hpp"

namespace ivdtr {

inline constexpr double kDefaultClip = 1e-3;

struct FitInfo {
    int iterations = 0;
    bool converged = true;
    double gradient_norm = 0.0;
};

struct RegressionOptions {
    double ridge = 1e-8;
    double tolerance = 1e-8;
    int max_iterations = 100;
};

struct LogisticModel {
    double intercept = 0.0;
    Vector coefficients;
    FitInfo info;

    double linear_predictor(Features h) const;
    double probability(Features h) const { return expit(linear_predictor(h)); }
};

/// expit(intercept + beta.h) truncated to [clip, 1 - clip].
double predict_prob(const LogisticModel& model, Features h, double clip);

/// Ridge-penalized maximum likelihood by Newton/IRLS with step halving.
/// The penalty ridge * ||(intercept, beta)||^2 keeps separable or constant-label
/// designs finite.
LogisticModel fit_logistic(const Matrix& features, std::span<const double> labels,
                           std::span<const double> weights = {},
                           const RegressionOptions& options = {});

// Penalized log-likelihood and its gradient, parameters packed as (intercept, beta).
double logistic_objective(const Matrix& features, std::span<const double> labels,
                          std::span<const double> weights, const Vector& params,
                          double ridge);
Vector logistic_score(const Matrix& features, std::span<const double> labels,
                      std::span<const double> weights, const Vector& params, double ridge);

struct LinearModel {
    double intercept = 0.0;
    Vector coefficients;

    double predict(Features h) const;
};

/// Weighted least squares with a ridge penalty on the slopes only.
LinearModel fit_linear(const Matrix& features, std::span<const double> targets,
                       std::span<const double> weights = {},
                       const RegressionOptions& options = {});

/// E[Y | H, Z = z, A = a] for one (z, a) cell.
struct OutcomeModel {
    enum class Kind { logistic, linear, constant };

    Kind kind = Kind::constant;
    LogisticModel logistic;
    LinearModel linear;
    double constant = 0.0;
    bool empty_cell = false;

    double predict(Features h, double clip, const Interval& range) const;
};

inline int z_index(int z) { return z > 0 ? 1 : 0; }
inline int cell_index(int z, int a) { return 2 * z_index(z) + (a > 0 ? 1 : 0); }

/// P(Z = +1 | H) and P(A = +1 | H, Z = z).
struct PropensityModels {
    LogisticModel pz;
    std::array<LogisticModel, 2> pa_given_z;  // indexed by z_index
    std::array<bool, 2> empty_arm{false, false};
    double clip = kDefaultClip;

    double prob_z_plus(Features h) const { return predict_prob(pz, h, clip); }
    double prob_action(Features h, int a, int z) const;
};

struct OutcomeModels {
    std::array<OutcomeModel, 4> mu;  // indexed by cell_index(z, a)
    Interval range;
    double clip = kDefaultClip;

    double mean(Features h, int z, int a) const {
        return mu[cell_index(z, a)].predict(h, clip, range);
    }
    int empty_cells() const;
};

struct NuisanceSet {
    PropensityModels propensity;
    OutcomeModels outcome;
};

PropensityModels fit_propensities(const Matrix& histories, std::span<const int> z,
                                  std::span<const int> a, double clip = kDefaultClip);

/// Stratified per-(z, a) outcome regressions; logistic if `binary_outcome`, linear otherwise.
OutcomeModels fit_outcome_models(const Matrix& histories, std::span<const int> z,
                                 std::span<const int> a, std::span<const double> y,
                                 const Interval& outcome_range, bool binary_outcome,
                                 double clip = kDefaultClip);

NuisanceSet fit_stage_nuisance(const Matrix& histories, std::span<const int> z,
                               std::span<const int> a, std::span<const double> y,
                               const Interval& outcome_range, bool binary_outcome,
                               double clip = kDefaultClip);

}  // namespace ivdtr
