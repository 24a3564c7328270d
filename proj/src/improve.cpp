#include "ivdtr/improve.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ivdtr {

int improve_rule_single(double lower, double upper, int baseline_action) {
    require(lower <= upper, "improvement interval has lower > upper");
    require(baseline_action == 1 || baseline_action == -1, "baseline action not in {-1,+1}");
    if (lower > 0.0) return 1;
    if (upper < 0.0) return -1;
    return baseline_action;
}

double relative_contrast_stage_K(const NuisanceSet& nuisance, Features h, int baseline_action,
                                 const Interval& tail) {
    const Interval flipped = mp_interval(nuisance, h, -baseline_action, tail);
    const Interval kept = mp_interval(nuisance, h, baseline_action, tail);
    return flipped.lower - kept.upper;
}

double relative_contrast_stage_k(const PropensityModels& propensity, const OutcomeModels& reward,
                                 const OutcomeModels& continuation, const OutcomeModels& total,
                                 Features h, int baseline_action) {
    const Interval flipped_total =
        mp_interval(propensity, total, h, -baseline_action, total.range);
    const Interval kept_reward = mp_interval(propensity, reward, h, baseline_action, reward.range);
    const Interval kept_cont =
        mp_interval(propensity, continuation, h, baseline_action, continuation.range);
    return flip_contrast(flipped_total, kept_reward, kept_cont);
}

OutcomeModels zero_outcome_models(double clip) {
    OutcomeModels m;
    m.range = {0.0, 0.0};
    m.clip = clip;
    for (auto& cell : m.mu) {
        cell.kind = OutcomeModel::Kind::constant;
        cell.constant = 0.0;
    }
    return m;
}

double RelativeContrast::flip_score(Features h) const {
    return relative_contrast_stage_k(propensity, reward, continuation, total, h,
                                     baseline->decide(h));
}

int RelativeContrast::decide(Features h) const {
    const int base = baseline->decide(h);
    return improved_action(
        relative_contrast_stage_k(propensity, reward, continuation, total, h, base), base);
}

double RelativeStageEstimate::deviation_fraction() const {
    if (action.empty()) return 0.0;
    std::size_t dev = 0;
    for (std::size_t i = 0; i < action.size(); ++i) dev += action[i] != baseline_action[i];
    return static_cast<double>(dev) / static_cast<double>(action.size());
}

namespace {

struct StageModels {
    PropensityModels propensity;
    OutcomeModels reward;
    OutcomeModels continuation;
    OutcomeModels total;
};

struct StageTargets {
    std::vector<double> reward;
    std::vector<double> continuation;
    std::vector<double> total;
    Interval reward_range;
    Interval continuation_range;
    Interval total_range;
    bool terminal = false;
};

Matrix take_rows(const Matrix& m, std::span<const std::size_t> rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(rows[r]));
    }
    return out;
}

template <typename T>
std::vector<T> take(const std::vector<T>& v, std::span<const std::size_t> rows) {
    std::vector<T> out;
    out.reserve(rows.size());
    for (auto r : rows) out.push_back(v[r]);
    return out;
}

StageModels fit_models(const Matrix& h, std::span<const int> z, std::span<const int> a,
                       const StageTargets& t, double clip) {
    StageModels m;
    m.propensity = fit_propensities(h, z, a, clip);
    m.reward = fit_outcome_models(h, z, a, t.reward, t.reward_range,
                                  is_binary_outcome(t.reward, t.reward_range), clip);
    if (t.terminal) {
        m.continuation = zero_outcome_models(clip);
        m.total = m.reward;
    } else {
        m.continuation = fit_outcome_models(h, z, a, t.continuation, t.continuation_range, false, clip);
        m.total = fit_outcome_models(h, z, a, t.total, t.total_range, false, clip);
    }
    return m;
}

}  // namespace

ImproveResult fit_ivimproved(const Dataset& data, const Dtr& baseline,
                             const std::string& baseline_name, const RewardBounds& bounds,
                             const ImproveOptions& options) {
    const int K = data.num_stages();
    require(baseline.num_stages() == K,
            "baseline has " + std::to_string(baseline.num_stages()) +
                " stages but the data has " + std::to_string(K));
    check_rewards_within(data, bounds);
    const bool crossfit = options.crossfit.num_batches >= 2;
    BatchAssignment batches;
    if (crossfit) {
        check_crossfit_batches(data.size(), options.crossfit.num_batches);
        Rng rng(options.crossfit.seed);
        batches = assign_batches(data.size(), options.crossfit.num_batches, rng);
    }

    ImproveResult out;
    out.stages.resize(static_cast<std::size_t>(K));
    std::vector<double> next_value(data.size(), 0.0);
    const double clip = options.fit.clip;

    for (int k = K - 1; k >= 0; --k) {
        const Matrix h = data.histories(k);
        const auto z = data.instruments(k);
        const auto a = data.actions(k);
        const std::size_t n = data.size();

        StageTargets t;
        t.terminal = k == K - 1;
        t.reward = data.rewards(k);
        t.reward_range = bounds.stage(k);
        t.continuation_range = {0.0, bounds.tail_width(k + 1)};
        t.total_range = {t.reward_range.lower, t.reward_range.upper + t.continuation_range.upper};
        t.continuation.resize(n);
        t.total.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            t.continuation[i] = std::clamp(next_value[i], t.continuation_range.lower,
                                           t.continuation_range.upper);
            t.total[i] = std::clamp(t.reward[i] + t.continuation[i], t.total_range.lower,
                                    t.total_range.upper);
        }

        const StageModels models = fit_models(h, z, a, t, clip);
        const auto& base_stage = baseline.stages[static_cast<std::size_t>(k)];

        auto& est = out.stages[static_cast<std::size_t>(k)];
        est.stage = k;
        est.baseline_action.resize(n);
        est.flip.resize(n);
        est.keep_value.resize(n);
        est.flip_value.resize(n);
        est.relative_value.resize(n);
        est.action.resize(n);
        est.empty_cells = models.reward.empty_cells() + models.continuation.empty_cells() +
                          models.total.empty_cells();

        int repairs = 0;
        const auto ni = static_cast<Eigen::Index>(n);
#pragma omp parallel for schedule(static) reduction(+ : repairs)
        for (Eigen::Index ii = 0; ii < ni; ++ii) {
            const auto i = static_cast<std::size_t>(ii);
            const Features hi = row_of(h, ii);
            const int base = base_stage.decide(hi);
            bool r1 = false;
            bool r2 = false;
            bool r3 = false;
            const Interval flipped_total =
                mp_interval(models.propensity, models.total, hi, -base, t.total_range, &r1);
            const Interval kept_reward =
                mp_interval(models.propensity, models.reward, hi, base, t.reward_range, &r2);
            const Interval kept_cont = mp_interval(models.propensity, models.continuation, hi, base,
                                                   models.continuation.range, &r3);
            repairs += static_cast<int>(r1) + static_cast<int>(r2) + static_cast<int>(r3);

            est.baseline_action[i] = base;
            est.keep_value[i] = kept_cont.lower;
            est.flip_value[i] = flipped_total.lower - kept_reward.upper;
            est.flip[i] = flip_contrast(flipped_total, kept_reward, kept_cont);
            est.action[i] = improved_action(est.flip[i], base);
            est.relative_value[i] = est.action[i] == base ? est.keep_value[i] : est.flip_value[i];
        }
        est.repairs = repairs;
        est.evaluator = RelativeContrast{models.propensity, models.reward, models.continuation,
                                         models.total,
                                         std::make_shared<const PolicyStage>(base_stage)};

        if (crossfit) {
            StageFitFn fit = [&](std::span<const std::size_t> rows) -> ContrastFunction {
                StageTargets sub;
                sub.terminal = t.terminal;
                sub.reward = take(t.reward, rows);
                sub.continuation = take(t.continuation, rows);
                sub.total = take(t.total, rows);
                sub.reward_range = t.reward_range;
                sub.continuation_range = t.continuation_range;
                sub.total_range = t.total_range;
                auto m = std::make_shared<const StageModels>(
                    fit_models(take_rows(h, rows), take(z, rows), take(a, rows), sub, clip));
                return [m, &base_stage](Features x) {
                    return relative_contrast_stage_k(m->propensity, m->reward, m->continuation,
                                                     m->total, x, base_stage.decide(x));
                };
            };
            est.classification_contrast = crossfit_stage_contrasts(h, batches, fit).contrast;
        } else {
            est.classification_contrast = est.flip;
        }
        next_value = est.relative_value;
    }

    out.q_rule.kind = DtrKind::iv_improved;
    out.q_rule.baseline = baseline_name;
    out.policy.kind = DtrKind::iv_improved;
    out.policy.baseline = baseline_name;
    out.projected_deviation.resize(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        const auto& est = out.stages[static_cast<std::size_t>(k)];
        out.q_rule.stages.push_back(PolicyStage{ContrastRule{est.evaluator}});

        const Matrix h = data.histories(k);
        std::vector<int> labels(data.size());
        std::vector<double> weights(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double c = est.classification_contrast[i];
            labels[i] = improved_action(c, est.baseline_action[i]);
            weights[i] = std::abs(c);
        }
        const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
        auto fit = fit_weighted_tree(h, labels, weights, options.projection.depth,
                                     options.projection.min_leaf_fraction * total);
        std::size_t dev = 0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            dev += fit.tree.decide(row_of(h, static_cast<Eigen::Index>(i))) != est.baseline_action[i];
        }
        out.projected_deviation[static_cast<std::size_t>(k)] =
            static_cast<double>(dev) / static_cast<double>(data.size());
        if (fit.zero_weight) {
            // No evidence either way: keep the baseline rule.
            out.policy.stages.push_back(baseline.stages[static_cast<std::size_t>(k)]);
            out.projected_deviation[static_cast<std::size_t>(k)] = 0.0;
        } else {
            out.policy.stages.push_back(PolicyStage{std::move(fit.tree)});
        }
    }
    return out;
}

}  // namespace ivdtr
