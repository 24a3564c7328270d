#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "ivdtr/bounds.hpp"
#include "ivdtr/data.hpp"

namespace ivdtr::testing {

inline double logit(double p) { return std::log(p / (1.0 - p)); }

/// A logistic model with no slope whose probability is `p` everywhere.
inline LogisticModel flat_logistic(double p, int dim) {
    LogisticModel m;
    m.intercept = logit(p);
    m.coefficients = Vector::Zero(dim);
    return m;
}

inline PropensityModels flat_propensity(double pz_plus, double pa_given_zminus,
                                        double pa_given_zplus, int dim, double clip = 1e-12) {
    PropensityModels p;
    p.pz = flat_logistic(pz_plus, dim);
    p.pa_given_z[0] = flat_logistic(pa_given_zminus, dim);
    p.pa_given_z[1] = flat_logistic(pa_given_zplus, dim);
    p.clip = clip;
    return p;
}

/// Constant cell means, ordered (z=-1,a=-1), (z=-1,a=+1), (z=+1,a=-1), (z=+1,a=+1).
inline OutcomeModels flat_outcomes(std::array<double, 4> mu, Interval range, double clip = 1e-12) {
    OutcomeModels o;
    for (std::size_t c = 0; c < 4; ++c) {
        o.mu[c].kind = OutcomeModel::Kind::constant;
        o.mu[c].constant = mu[c];
    }
    o.range = range;
    o.clip = clip;
    return o;
}

inline double uniform(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int coin(std::mt19937_64& rng, double p = 0.5) { return uniform(rng) < p ? 1 : -1; }

/// Random K-stage dataset with rewards in [0, 1].
inline Dataset random_dataset(std::size_t n, std::vector<int> dims, std::uint64_t seed,
                              bool binary_rewards = true) {
    std::mt19937_64 rng(seed);
    std::vector<Trajectory> trajs(n);
    for (auto& t : trajs) {
        for (int d : dims) {
            StageObservation s;
            for (int j = 0; j < d; ++j) s.covariates.push_back(uniform(rng, -1.0, 1.0));
            s.instrument = coin(rng);
            s.action = uniform(rng) < (s.instrument > 0 ? 0.8 : 0.3) ? 1 : -1;
            const double p = 0.5 + 0.2 * s.action * (s.covariates.empty() ? 0.5 : s.covariates[0]);
            s.reward = binary_rewards ? (uniform(rng) < p ? 1.0 : 0.0) : uniform(rng);
            t.stages.push_back(std::move(s));
        }
    }
    return Dataset(Schema{std::move(dims)}, std::move(trajs));
}

}  // namespace ivdtr::testing
