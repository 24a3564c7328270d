#include "ivdtr/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "ivdtr/improve.hpp"

namespace ivdtr {

namespace {

double sgn(double t) { return static_cast<double>((t > 0) - (t < 0)); }

int bernoulli(Rng& rng, double p) { return uniform01(rng) < p ? 1 : 0; }
int rademacher(Rng& rng) { return uniform01(rng) < 0.5 ? 1 : -1; }

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

}  // namespace

void SimConfig::validate() const {
    require(std::isfinite(c1) && c1 > 0.0, "c1 must be a positive number");
    require(std::isfinite(xi) && xi >= 0.0, "xi must be a non-negative number");
    require(n_train >= 1, "n_train must be >= 1");
    require(replications >= 1, "replications must be >= 1");
    require(n_eval >= 1, "n_eval must be >= 1");
    require(depth >= 0, "depth must be >= 0");
    require(std::isfinite(stage1_signal_threshold), "stage1_signal_threshold must be finite");
    require(crossfit >= 0, "crossfit must be >= 0");
    require(clip > 0.0 && clip < 0.5, "probability clip must lie in (0, 0.5)");
}

std::string SimConfig::label() const {
    return "c1-" + format_number(c1) + "_xi-" + format_number(xi) + "_n-" +
           std::to_string(n_train);
}

Schema sim_schema() { return Schema{{2, 0}}; }

RewardBounds sim_reward_bounds() { return RewardBounds({{0.0, 1.0}, {0.0, 1.0}}); }

double sim_p_a1(const SimConfig& cfg, int z1, int u1) {
    return expit(cfg.c1 * (z1 + 1) - cfg.xi * u1 - 2.0);
}

double sim_p_r1(const SimConfig& cfg, double x1, int a1, int u1) {
    return expit(0.5 * (sgn(x1 - cfg.stage1_signal_threshold) - cfg.xi * u1 + 0.2) * (a1 + 1));
}

double sim_p_a2(const SimConfig& cfg, double x1, int z2, int r1, int u2) {
    return expit(cfg.c1 * (z2 + 1) + x1 - 7.0 * (r1 - 0.5) - cfg.xi * (1.0 + x1) * (2 * u2 - 1));
}

double sim_p_r2(const SimConfig& cfg, double x1, int a1, int r1, int a2, int u2) {
    return expit(0.1 * (a1 + 1) + 0.4 * (1.0 - x1 + r1 - cfg.xi * (2 * u2 - 1)) * (a2 + 1));
}

SimSample generate(const SimConfig& cfg, std::size_t n, Rng& rng) {
    require(n >= 1, "cannot generate an empty sample");
    std::vector<Trajectory> trajs(n);
    LatentTrace latent;
    latent.u1.resize(n);
    latent.u2.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x1 = 2.0 * uniform01(rng) - 1.0;
        const double x2 = 2.0 * uniform01(rng) - 1.0;
        const int u1 = bernoulli(rng, 0.5);
        const int z1 = rademacher(rng);
        const int a1 = bernoulli(rng, sim_p_a1(cfg, z1, u1)) ? 1 : -1;
        const int r1 = bernoulli(rng, sim_p_r1(cfg, x1, a1, u1));
        const int u2 = bernoulli(rng, 0.5);
        const int z2 = rademacher(rng);
        const int a2 = bernoulli(rng, sim_p_a2(cfg, x1, z2, r1, u2)) ? 1 : -1;
        const int r2 = bernoulli(rng, sim_p_r2(cfg, x1, a1, r1, a2, u2));

        trajs[i].stages = {StageObservation{{x1, x2}, z1, a1, static_cast<double>(r1)},
                           StageObservation{{}, z2, a2, static_cast<double>(r2)}};
        latent.u1[i] = u1;
        latent.u2[i] = u2;
    }
    return {Dataset(sim_schema(), std::move(trajs)), std::move(latent)};
}

EvalPoints draw_eval_points(std::size_t n, Rng& rng) {
    EvalPoints p;
    p.x1.resize(n);
    p.x2.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        p.x1[i] = 2.0 * uniform01(rng) - 1.0;
        p.x2[i] = 2.0 * uniform01(rng) - 1.0;
    }
    return p;
}

double value_at(const Dtr& policy, const SimConfig& cfg, double x1, double x2) {
    const double h1[2] = {x1, x2};
    const int a1 = policy.decide(0, h1);
    const double pr1 = 0.5 * (sim_p_r1(cfg, x1, a1, 0) + sim_p_r1(cfg, x1, a1, 1));
    double v = pr1;
    for (int r1 : {0, 1}) {
        const double h2[4] = {x1, x2, static_cast<double>(a1), static_cast<double>(r1)};
        const int a2 = policy.decide(1, h2);
        const double pr2 =
            0.5 * (sim_p_r2(cfg, x1, a1, r1, a2, 0) + sim_p_r2(cfg, x1, a1, r1, a2, 1));
        v += (r1 ? pr1 : 1.0 - pr1) * pr2;
    }
    return v;
}

namespace {

EvalReport summarize(const std::vector<double>& vals) {
    const auto n = static_cast<double>(vals.size());
    double sum = 0.0;
    for (double v : vals) sum += v;
    const double mean = sum / n;
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    EvalReport r;
    r.raw_value = mean;
    r.normalized_value = mean / kStdBaselineValue;
    r.monte_carlo_se = vals.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    r.n_eval = vals.size();
    return r;
}

void check_two_stage(const Dtr& policy) {
    require(policy.num_stages() == 2,
            "policy has " + std::to_string(policy.num_stages()) +
                " stages; the simulation needs 2");
}

}  // namespace

EvalReport evaluate_on(const Dtr& policy, const SimConfig& cfg, const EvalPoints& points) {
    check_two_stage(policy);
    require(points.size() >= 1, "no evaluation points");
    std::vector<double> vals(points.size());
    const auto n = static_cast<std::ptrdiff_t>(points.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        vals[static_cast<std::size_t>(i)] =
            value_at(policy, cfg, points.x1[static_cast<std::size_t>(i)],
                     points.x2[static_cast<std::size_t>(i)]);
    }
    return summarize(vals);
}

namespace serial {

EvalReport evaluate_on(const Dtr& policy, const SimConfig& cfg, const EvalPoints& points) {
    check_two_stage(policy);
    require(points.size() >= 1, "no evaluation points");
    std::vector<double> vals(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        vals[i] = value_at(policy, cfg, points.x1[i], points.x2[i]);
    }
    return summarize(vals);
}

}  // namespace serial

EvalReport true_value(const Dtr& policy, const SimConfig& cfg, std::size_t n_eval, Rng& rng) {
    return evaluate_on(policy, cfg, draw_eval_points(n_eval, rng));
}

namespace {

struct ArmModels {
    std::array<OutcomeModel, 2> mu;  // index 0: a = -1, 1: a = +1
    Interval range;
    double clip = kDefaultClip;

    double mean(Features h, int a) const { return mu[a > 0 ? 1 : 0].predict(h, clip, range); }
};

ArmModels fit_arm_models(const Matrix& h, std::span<const int> a, std::span<const double> y,
                         const Interval& range, double clip) {
    const bool binary = is_binary_outcome(y, range);
    ArmModels m;
    m.range = range;
    m.clip = clip;
    for (int arm : {-1, 1}) {
        std::vector<Eigen::Index> idx;
        std::vector<double> target;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i] == arm) {
                idx.push_back(static_cast<Eigen::Index>(i));
                target.push_back(y[i]);
            }
        }
        Matrix sub(static_cast<Eigen::Index>(idx.size()), h.cols());
        for (std::size_t r = 0; r < idx.size(); ++r) sub.row(static_cast<Eigen::Index>(r)) = h.row(idx[r]);
        auto& cell = m.mu[arm > 0 ? 1 : 0];
        if (binary) {
            cell.kind = OutcomeModel::Kind::logistic;
            cell.logistic = fit_logistic(sub, target);
        } else {
            cell.kind = OutcomeModel::Kind::linear;
            cell.linear = fit_linear(sub, target);
        }
    }
    return m;
}

struct SraStage {
    ArmModels arms;
    TreeRule tree;
};

SraStage fit_sra_stage(const Matrix& h, std::span<const int> a, std::span<const double> y,
                       const Interval& range, const ProjectionOptions& projection, double clip,
                       int stage) {
    const auto plus = std::count(a.begin(), a.end(), 1);
    if (plus == 0 || plus == static_cast<std::ptrdiff_t>(a.size())) {
        throw Error("no treatment variation at stage " + std::to_string(stage + 1));
    }
    SraStage out;
    out.arms = fit_arm_models(h, a, y, range, clip);

    std::vector<double> alab(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) alab[i] = a[i] > 0 ? 1.0 : 0.0;
    const LogisticModel prop = fit_logistic(h, alab);

    std::vector<double> phi(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Features hi = row_of(h, static_cast<Eigen::Index>(i));
        const double e_plus = predict_prob(prop, hi, clip);
        const double p_obs = a[i] > 0 ? e_plus : 1.0 - e_plus;
        const double mu_p = out.arms.mean(hi, 1);
        const double mu_m = out.arms.mean(hi, -1);
        const double mu_a = a[i] > 0 ? mu_p : mu_m;
        phi[i] = mu_p - mu_m + a[i] * (y[i] - mu_a) / p_obs;
    }
    const LinearModel smooth = fit_linear(h, phi);
    std::vector<double> contrast(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        contrast[i] = smooth.predict(row_of(h, static_cast<Eigen::Index>(i)));
    }
    out.tree = project_stage(h, contrast, projection).tree;
    return out;
}

}  // namespace

Dtr fit_sra_baseline(const Dataset& data, const RewardBounds& bounds,
                     const ProjectionOptions& projection, double clip) {
    check_rewards_within(data, bounds);
    const int K = data.num_stages();
    std::vector<PolicyStage> stages(static_cast<std::size_t>(K));
    std::vector<double> next(data.size(), 0.0);
    for (int k = K - 1; k >= 0; --k) {
        const Matrix h = data.histories(k);
        const auto po = pseudo_outcomes(data.rewards(k), next);
        const SraStage s = fit_sra_stage(h, data.actions(k), po, bounds.tail(k), projection, clip, k);
        for (std::size_t i = 0; i < data.size(); ++i) {
            const Features hi = row_of(h, static_cast<Eigen::Index>(i));
            next[i] = std::max(s.arms.mean(hi, 1), s.arms.mean(hi, -1));
        }
        stages[static_cast<std::size_t>(k)] = PolicyStage{s.tree};
    }
    Dtr d;
    d.kind = DtrKind::sra;
    d.stages = std::move(stages);
    return d;
}

std::vector<double> CellResult::values(Regime r) const {
    std::vector<double> v;
    v.reserve(reps.size());
    for (const auto& rep : reps) v.push_back(rep.at(r));
    return v;
}

double quantile(std::vector<double> v, double p) {
    require(!v.empty(), "quantile of an empty sample");
    require(p >= 0.0 && p <= 1.0, "quantile level out of range");
    std::sort(v.begin(), v.end());
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

RegimeSummary CellResult::summary(Regime r) const {
    const auto v = values(r);
    RegimeSummary s;
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    s.q25 = quantile(v, 0.25);
    s.q75 = quantile(v, 0.75);
    return s;
}

ReplicationResult run_replication(const SimConfig& cfg, int rep) {
    const auto rep64 = static_cast<std::uint64_t>(rep);
    Rng train_rng(mix_seed(cfg.seed, 2 * rep64));
    Rng eval_rng(mix_seed(cfg.seed, 2 * rep64 + 1));
    const SimSample sample = generate(cfg, cfg.n_train, train_rng);
    const Dataset& data = sample.data;
    const RewardBounds bounds = sim_reward_bounds();

    ProjectionOptions projection;
    projection.depth = cfg.depth;
    StageFitOptions fit;
    fit.clip = cfg.clip;
    CrossfitOptions cf;
    cf.num_batches = cfg.crossfit;
    cf.seed = mix_seed(cfg.seed ^ 0x5eedULL, rep64);

    ImproveOptions iopt;
    iopt.projection = projection;
    iopt.fit = fit;
    iopt.crossfit = cf;

    std::array<Dtr, kNumRegimes> policies;
    policies[0] = constant_dtr(2, -1);
    policies[2] = constant_dtr(2, 1);
    policies[4] = fit_sra_baseline(data, bounds, projection, cfg.clip);
    policies[1] = fit_ivimproved(data, policies[0], "std", bounds, iopt).policy;
    policies[3] = fit_ivimproved(data, policies[2], "prosp", bounds, iopt).policy;
    policies[5] = fit_ivimproved(data, policies[4], "sra", bounds, iopt).policy;
    const std::array<double, 3> lambdas = {1.0, 0.0, 0.5};
    for (std::size_t j = 0; j < lambdas.size(); ++j) {
        const WeightSpec w = WeightSpec::constant({lambdas[j], lambdas[j]});
        policies[6 + j] = fit_ivoptimal_crossfit(data, bounds, w, projection, cf, fit).policy;
    }

    const EvalPoints points = draw_eval_points(cfg.n_eval, eval_rng);
    ReplicationResult out;
    out.rep = rep;
    for (std::size_t r = 0; r < policies.size(); ++r) {
        const EvalReport e = evaluate_on(policies[r], cfg, points);
        out.value[r] = e.normalized_value;
        out.se[r] = e.monte_carlo_se;
    }
    return out;
}

CellResult run_cell(const SimConfig& cfg) {
    cfg.validate();
    CellResult cell;
    cell.config = cfg;
    cell.reps.resize(static_cast<std::size_t>(cfg.replications));
    std::vector<std::string> errors(cell.reps.size());
#pragma omp parallel for schedule(dynamic)
    for (int rep = 0; rep < cfg.replications; ++rep) {
        try {
            cell.reps[static_cast<std::size_t>(rep)] = run_replication(cfg, rep);
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(rep)] = e.what();
        }
    }
    for (std::size_t r = 0; r < errors.size(); ++r) {
        if (!errors[r].empty()) {
            throw Error(ErrorKind::numerical, "replication " + std::to_string(r) + " of cell " +
                                                  cfg.label() + " failed: " + errors[r]);
        }
    }
    return cell;
}

void write_cell_csv(const CellResult& cell, std::ostream& out) {
    out << "rep,regime,value\n";
    char buf[64];
    for (const auto& rep : cell.reps) {
        for (int r = 0; r < kNumRegimes; ++r) {
            std::snprintf(buf, sizeof buf, "%.17g", rep.value[static_cast<std::size_t>(r)]);
            out << rep.rep << ',' << kRegimeNames[static_cast<std::size_t>(r)] << ',' << buf << '\n';
        }
    }
}

Json cell_summary_json(const CellResult& cell) {
    Json j = Json::object();
    for (int r = 0; r < kNumRegimes; ++r) {
        const auto s = cell.summary(static_cast<Regime>(r));
        j[kRegimeNames[static_cast<std::size_t>(r)]] = {{"mean", s.mean}, {"q25", s.q25}, {"q75", s.q75}};
    }
    return j;
}

}  // namespace ivdtr
