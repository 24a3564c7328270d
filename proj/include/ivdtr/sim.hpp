#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ivdtr/crossfit.hpp"
#include "ivdtr/data.hpp"
#include "ivdtr/dtr.hpp"
#include "ivdtr/policy_json.hpp"

namespace ivdtr {

struct SimConfig {
    double c1 = 4.0;  // instrument strength
    double xi = 1.0;  // unmeasured-confounding level
    std::size_t n_train = 1000;
    std::uint64_t seed = 1;
    int depth = 2;
    int replications = 100;
    std::size_t n_eval = 100000;
    // R1's signal is sgn(X1 - threshold); the default keeps it at -1 on the support.
    double stage1_signal_threshold = 1.0;
    int crossfit = 0;  // batches for the IV fits; 0 or 1 disables
    double clip = kDefaultClip;

    void validate() const;
    std::string label() const;
};

/// Latent confounders per trajectory, for debugging only.
struct LatentTrace {
    std::vector<int> u1;
    std::vector<int> u2;
};

struct SimSample {
    Dataset data;
    LatentTrace latent;
};

/// 53-bit uniform on [0, 1) from one engine draw, identical across standard libraries.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Schema sim_schema();
RewardBounds sim_reward_bounds();

// Conditional success probabilities of the two rewards.
double sim_p_r1(const SimConfig& cfg, double x1, int a1, int u1);
double sim_p_r2(const SimConfig& cfg, double x1, int a1, int r1, int a2, int u2);
double sim_p_a1(const SimConfig& cfg, int z1, int u1);
double sim_p_a2(const SimConfig& cfg, double x1, int z2, int r1, int u2);

SimSample generate(const SimConfig& cfg, std::size_t n, Rng& rng);

struct EvalPoints {
    std::vector<double> x1;
    std::vector<double> x2;
    std::size_t size() const { return x1.size(); }
};

EvalPoints draw_eval_points(std::size_t n, Rng& rng);

/// E[R1 + R2 | X = x] under `policy`, exact over the latent and intermediate binaries.
double value_at(const Dtr& policy, const SimConfig& cfg, double x1, double x2);

/// Raw value of the all -1 regime, known in closed form.
inline constexpr double kStdBaselineValue = 1.0;

struct EvalReport {
    double raw_value = 0.0;
    double normalized_value = 0.0;
    double monte_carlo_se = 0.0;
    std::size_t n_eval = 0;
};

EvalReport evaluate_on(const Dtr& policy, const SimConfig& cfg, const EvalPoints& points);
EvalReport true_value(const Dtr& policy, const SimConfig& cfg, std::size_t n_eval, Rng& rng);

namespace serial {
EvalReport evaluate_on(const Dtr& policy, const SimConfig& cfg, const EvalPoints& points);
}

/// Backward AIPW C-learning that ignores the instrument. The earlier-stage
/// pseudo-outcome is r_k + max_a mu_{k+1}(h_{k+1}, a).
Dtr fit_sra_baseline(const Dataset& data, const RewardBounds& bounds,
                     const ProjectionOptions& projection, double clip = kDefaultClip);

enum class Regime { std_b, std_up, prosp_b, prosp_up, sra_b, sra_up, iv_1, iv_0, iv_half };
inline constexpr int kNumRegimes = 9;
inline constexpr std::array<const char*, kNumRegimes> kRegimeNames = {
    "std_b", "std_up", "prosp_b", "prosp_up", "sra_b", "sra_up", "iv_1", "iv_0", "iv_half"};

struct ReplicationResult {
    int rep = 0;
    std::array<double, kNumRegimes> value{};  // normalized
    std::array<double, kNumRegimes> se{};
    double at(Regime r) const { return value[static_cast<std::size_t>(r)]; }
};

struct RegimeSummary {
    double mean = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
};

struct CellResult {
    SimConfig config;
    std::vector<ReplicationResult> reps;

    std::vector<double> values(Regime r) const;
    RegimeSummary summary(Regime r) const;
};

/// Type-7 (linear interpolation) sample quantile.
double quantile(std::vector<double> v, double p);

ReplicationResult run_replication(const SimConfig& cfg, int rep);
CellResult run_cell(const SimConfig& cfg);

/// Columns rep,regime,value.
void write_cell_csv(const CellResult& cell, std::ostream& out);
/// {regime: {mean, q25, q75}}.
Json cell_summary_json(const CellResult& cell);

}  // namespace ivdtr
