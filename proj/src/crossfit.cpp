#include "ivdtr/crossfit.hpp"

namespace ivdtr {

namespace {

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

}  // namespace

void check_crossfit_batches(std::size_t n, int num_batches) {
    require(num_batches >= 2, "cross-fitting needs at least 2 batches");
    require(n / static_cast<std::size_t>(num_batches) >= kMinBatchSize,
            "cross-fitting batches too small: " + std::to_string(n) + " trajectories over " +
                std::to_string(num_batches) + " batches (need >= " +
                std::to_string(kMinBatchSize) + " per batch)");
}

CrossfitContrasts crossfit_stage_contrasts(const Matrix& histories, const BatchAssignment& batches,
                                           const StageFitFn& fit) {
    require(batches.num_batches >= 2, "cross-fitting needs at least 2 batches");
    require(static_cast<Eigen::Index>(batches.batch_of.size()) == histories.rows(),
            "batch assignment does not match the data");
    CrossfitContrasts out;
    out.batches = batches;
    out.contrast.assign(batches.batch_of.size(), 0.0);
    out.fold_models.resize(static_cast<std::size_t>(batches.num_batches));

    // Folds are independent; each writes only its own batch's entries.
#pragma omp parallel for schedule(dynamic)
    for (int j = 0; j < batches.num_batches; ++j) {
        const auto train = batches.complement(j);
        auto model = fit(train);
        for (auto i : batches.members(j)) {
            out.contrast[i] = model(row_of(histories, static_cast<Eigen::Index>(i)));
        }
        out.fold_models[static_cast<std::size_t>(j)] = std::move(model);
    }
    return out;
}

CrossfitResult fit_ivoptimal_crossfit(const Dataset& data, const RewardBounds& bounds,
                                      const WeightSpec& lambda, const ProjectionOptions& projection,
                                      const CrossfitOptions& crossfit,
                                      const StageFitOptions& options) {
    CrossfitResult out;
    out.full_sample = backward_induct(data, bounds, lambda, options);
    if (crossfit.num_batches <= 1) {
        out.policy = project_policy(out.full_sample.stages, data, projection, lambda);
        return out;
    }

    check_crossfit_batches(data.size(), crossfit.num_batches);
    Rng rng(crossfit.seed);
    const auto batches = assign_batches(data.size(), crossfit.num_batches, rng);

    const int K = data.num_stages();
    out.policy.kind = DtrKind::iv_optimal;
    out.policy.lambda = lambda;
    out.stages.resize(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        const Interval tail = bounds.tail(k);
        const std::vector<double> next =
            k + 1 < K ? out.full_sample.stages[static_cast<std::size_t>(k + 1)].value
                      : std::vector<double>(data.size(), 0.0);
        const auto outcomes = pseudo_outcomes(data.rewards(k), next, &tail);
        const Matrix h = data.histories(k);
        const auto z = data.instruments(k);
        const auto a = data.actions(k);
        const double lam = lambda.at(k);

        StageFitFn fit = [&](std::span<const std::size_t> rows) -> ContrastFunction {
            auto est = fit_stage(take_rows(h, rows), take(z, rows), take(a, rows),
                                 take(outcomes, rows), tail, lam, options);
            auto ev = std::make_shared<const WeightedContrast>(est.evaluator());
            return [ev](Features x) { return ev->score(x); };
        };
        out.stages[static_cast<std::size_t>(k)] = crossfit_stage_contrasts(h, batches, fit);
        out.policy.stages.push_back(PolicyStage{
            project_stage(h, out.stages[static_cast<std::size_t>(k)].contrast, projection).tree});
    }
    return out;
}

}  // namespace ivdtr
