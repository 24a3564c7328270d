#include "ivdtr/nuisance.hpp"

#include <algorithm>
#include <cmath>

namespace ivdtr {

namespace {

double dot(const Vector& beta, Features h) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) s += beta[j] * h[static_cast<std::size_t>(j)];
    return s;
}

double softplus(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

void check_inputs(const Matrix& x, std::span<const double> y, std::span<const double> w) {
    require(x.rows() >= 1, "regression needs at least one row");
    require(static_cast<Eigen::Index>(y.size()) == x.rows(), "target length mismatch");
    require(w.empty() || static_cast<Eigen::Index>(w.size()) == x.rows(),
            "weight length mismatch");
    require(x.allFinite(), "non-finite feature value");
    for (double v : y) require(std::isfinite(v), "non-finite target value");
    for (double v : w) require(std::isfinite(v) && v >= 0.0, "weights must be finite and >= 0");
}

double weight_at(std::span<const double> w, Eigen::Index i) {
    return w.empty() ? 1.0 : w[static_cast<std::size_t>(i)];
}

// Eta for packed parameters (intercept first).
Vector linear_predictors(const Matrix& x, const Vector& params) {
    return (x * params.tail(x.cols())).array() + params[0];
}

Matrix rows_where(const Matrix& x, const std::vector<Eigen::Index>& idx) {
    Matrix out(static_cast<Eigen::Index>(idx.size()), x.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = x.row(idx[r]);
    return out;
}

}  // namespace

double LogisticModel::linear_predictor(Features h) const {
    require(static_cast<Eigen::Index>(h.size()) == coefficients.size(),
            "feature dimension mismatch in logistic model");
    return intercept + dot(coefficients, h);
}

double predict_prob(const LogisticModel& model, Features h, double clip) {
    return std::clamp(model.probability(h), clip, 1.0 - clip);
}

double logistic_objective(const Matrix& x, std::span<const double> y,
                          std::span<const double> w, const Vector& params, double ridge) {
    const Vector eta = linear_predictors(x, params);
    double ll = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        ll += weight_at(w, i) * (y[static_cast<std::size_t>(i)] * eta[i] - softplus(eta[i]));
    }
    return ll - ridge * params.squaredNorm();
}

Vector logistic_score(const Matrix& x, std::span<const double> y, std::span<const double> w,
                      const Vector& params, double ridge) {
    const Vector eta = linear_predictors(x, params);
    Vector resid(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        resid[i] = weight_at(w, i) * (y[static_cast<std::size_t>(i)] - expit(eta[i]));
    }
    Vector g(params.size());
    g[0] = resid.sum();
    g.tail(x.cols()) = x.transpose() * resid;
    return g - 2.0 * ridge * params;
}

LogisticModel fit_logistic(const Matrix& x, std::span<const double> y,
                           std::span<const double> w, const RegressionOptions& opt) {
    check_inputs(x, y, w);
    for (double v : y) require(v == 0.0 || v == 1.0, "logistic labels must be 0 or 1");

    const Eigen::Index p = x.cols() + 1;
    Vector params = Vector::Zero(p);
    double obj = logistic_objective(x, y, w, params, opt.ridge);
    FitInfo info;
    info.converged = false;

    for (int it = 0; it < opt.max_iterations; ++it) {
        const Vector g = logistic_score(x, y, w, params, opt.ridge);
        info.iterations = it;
        info.gradient_norm = g.norm();
        if (info.gradient_norm <= opt.tolerance) {
            info.converged = true;
            break;
        }
        const Vector eta = linear_predictors(x, params);
        Eigen::MatrixXd info_mat = Eigen::MatrixXd::Zero(p, p);
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            const double pr = expit(eta[i]);
            const double wi = weight_at(w, i) * pr * (1.0 - pr);
            if (wi == 0.0) continue;
            Vector xi(p);
            xi[0] = 1.0;
            xi.tail(x.cols()) = x.row(i).transpose();
            info_mat.selfadjointView<Eigen::Lower>().rankUpdate(xi, wi);
        }
        info_mat = info_mat.selfadjointView<Eigen::Lower>();
        info_mat.diagonal().array() += 2.0 * opt.ridge;
        const Vector step = info_mat.ldlt().solve(g);

        double scale = 1.0;
        bool improved = false;
        for (int half = 0; half < 40; ++half, scale *= 0.5) {
            const Vector trial = params + scale * step;
            const double trial_obj = logistic_objective(x, y, w, trial, opt.ridge);
            if (std::isfinite(trial_obj) && trial_obj >= obj) {
                params = trial;
                obj = trial_obj;
                improved = true;
                break;
            }
        }
        if (!improved) break;
    }
    if (!info.converged) {
        const Vector g = logistic_score(x, y, w, params, opt.ridge);
        info.gradient_norm = g.norm();
        info.converged = info.gradient_norm <= opt.tolerance;
    }

    LogisticModel model;
    model.intercept = params[0];
    model.coefficients = params.tail(x.cols());
    model.info = info;
    return model;
}

double LinearModel::predict(Features h) const {
    require(static_cast<Eigen::Index>(h.size()) == coefficients.size(),
            "feature dimension mismatch in linear model");
    return intercept + dot(coefficients, h);
}

LinearModel fit_linear(const Matrix& x, std::span<const double> y, std::span<const double> w,
                       const RegressionOptions& opt) {
    check_inputs(x, y, w);
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    // Augmented least squares: [sqrt(W)[1 X]; sqrt(ridge) [0 I]] theta = [sqrt(W) y; 0].
    Eigen::MatrixXd design = Eigen::MatrixXd::Zero(n + d, d + 1);
    Vector rhs = Vector::Zero(n + d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double sw = std::sqrt(weight_at(w, i));
        design(i, 0) = sw;
        design.row(i).tail(d) = sw * x.row(i);
        rhs[i] = sw * y[static_cast<std::size_t>(i)];
    }
    const double sr = std::sqrt(opt.ridge);
    for (Eigen::Index j = 0; j < d; ++j) design(n + j, j + 1) = sr;
    const Vector theta = design.colPivHouseholderQr().solve(rhs);

    LinearModel model;
    model.intercept = theta[0];
    model.coefficients = theta.tail(d);
    require(std::isfinite(model.intercept) && model.coefficients.allFinite(),
            "linear fit produced non-finite parameters");
    return model;
}

double OutcomeModel::predict(Features h, double clip, const Interval& range) const {
    double v = constant;
    switch (kind) {
        case Kind::logistic: v = predict_prob(logistic, h, clip); break;
        case Kind::linear: v = linear.predict(h); break;
        case Kind::constant: break;
    }
    return std::clamp(v, range.lower, range.upper);
}

double PropensityModels::prob_action(Features h, int a, int z) const {
    const double p_plus = predict_prob(pa_given_z[z_index(z)], h, clip);
    return a > 0 ? p_plus : 1.0 - p_plus;
}

int OutcomeModels::empty_cells() const {
    return static_cast<int>(std::count_if(mu.begin(), mu.end(),
                                          [](const OutcomeModel& m) { return m.empty_cell; }));
}

PropensityModels fit_propensities(const Matrix& h, std::span<const int> z,
                                  std::span<const int> a, double clip) {
    require(h.rows() >= 1, "nuisance fitting needs at least one row");
    require(static_cast<Eigen::Index>(z.size()) == h.rows() &&
                static_cast<Eigen::Index>(a.size()) == h.rows(),
            "nuisance input length mismatch");
    require(clip > 0.0 && clip < 0.5, "probability clip must lie in (0, 0.5)");

    PropensityModels out;
    out.clip = clip;
    std::vector<double> zlab(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) zlab[i] = z[i] > 0 ? 1.0 : 0.0;
    out.pz = fit_logistic(h, zlab);

    for (int zv : {-1, 1}) {
        std::vector<Eigen::Index> idx;
        std::vector<double> lab;
        for (std::size_t i = 0; i < z.size(); ++i) {
            if (z[i] == zv) {
                idx.push_back(static_cast<Eigen::Index>(i));
                lab.push_back(a[i] > 0 ? 1.0 : 0.0);
            }
        }
        auto& model = out.pa_given_z[z_index(zv)];
        if (idx.empty()) {
            model.coefficients = Vector::Zero(h.cols());
            out.empty_arm[z_index(zv)] = true;
        } else {
            model = fit_logistic(rows_where(h, idx), lab);
        }
    }
    return out;
}

OutcomeModels fit_outcome_models(const Matrix& h, std::span<const int> z, std::span<const int> a,
                                 std::span<const double> y, const Interval& range, bool binary,
                                 double clip) {
    require(h.rows() >= 1, "nuisance fitting needs at least one row");
    require(static_cast<Eigen::Index>(y.size()) == h.rows(), "outcome length mismatch");
    require(range.lower <= range.upper, "outcome range is inverted");
    for (double v : y) {
        require(range.contains(v, 1e-9), "outcome outside its declared range");
    }

    OutcomeModels out;
    out.range = range;
    out.clip = clip;
    for (int zv : {-1, 1}) {
        for (int av : {-1, 1}) {
            std::vector<Eigen::Index> idx;
            std::vector<double> target;
            for (std::size_t i = 0; i < y.size(); ++i) {
                if (z[i] == zv && a[i] == av) {
                    idx.push_back(static_cast<Eigen::Index>(i));
                    target.push_back(y[i]);
                }
            }
            auto& m = out.mu[cell_index(zv, av)];
            if (idx.empty()) {
                m.kind = OutcomeModel::Kind::constant;
                m.constant = range.midpoint();
                m.empty_cell = true;
                continue;
            }
            const Matrix sub = rows_where(h, idx);
            if (binary) {
                m.kind = OutcomeModel::Kind::logistic;
                m.logistic = fit_logistic(sub, target);
            } else {
                m.kind = OutcomeModel::Kind::linear;
                m.linear = fit_linear(sub, target);
            }
        }
    }
    return out;
}

NuisanceSet fit_stage_nuisance(const Matrix& h, std::span<const int> z, std::span<const int> a,
                               std::span<const double> y, const Interval& range, bool binary,
                               double clip) {
    NuisanceSet set;
    set.propensity = fit_propensities(h, z, a, clip);
    set.outcome = fit_outcome_models(h, z, a, y, range, binary, clip);
    return set;
}

}  // namespace ivdtr
