#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "ivdtr/bounds.hpp"
#include "ivdtr/tree.hpp"

namespace ivdtr {

struct PolicyStage;

/// Q_lambda(h, +1) - Q_lambda(h, -1) from Manski-Pepper intervals.
struct WeightedContrast {
    PropensityModels propensity;
    OutcomeModels outcome;
    Interval tail;
    double lambda = 0.5;

    double score(Features h) const;
    int decide(Features h) const { return sign_of(score(h)); }
};

/// A linear smoother of a contrast; the decision is its sign.
struct LinearContrast {
    LinearModel model;

    double score(Features h) const { return model.predict(h); }
    int decide(Features h) const { return sign_of(score(h)); }
};

/// Worst-case gain from flipping a baseline action: positive means flip.
/// At the final stage `continuation` is the zero model on range [0, 0] and
/// `total` equals `reward`.
struct RelativeContrast {
    PropensityModels propensity;
    OutcomeModels reward;
    OutcomeModels continuation;
    OutcomeModels total;
    std::shared_ptr<const PolicyStage> baseline;

    double flip_score(Features h) const;
    int decide(Features h) const;
};

struct ContrastRule {
    std::variant<WeightedContrast, LinearContrast, RelativeContrast> evaluator;

    int decide(Features h) const;
};

struct ConstantRule {
    int action = -1;
};

struct PolicyStage {
    std::variant<TreeRule, ContrastRule, ConstantRule> rule;

    int decide(Features h) const;
    const char* type_name() const;
};

enum class DtrKind { iv_optimal, iv_improved, sra, constant };

const char* to_string(DtrKind kind);
DtrKind dtr_kind_from_string(const std::string& s);

struct Dtr {
    DtrKind kind = DtrKind::constant;
    std::vector<PolicyStage> stages;
    WeightSpec lambda;
    std::string baseline;  // set for iv_improved

    int num_stages() const { return static_cast<int>(stages.size()); }
    int decide(int stage, Features h) const { return stages.at(static_cast<std::size_t>(stage)).decide(h); }
};

Dtr constant_dtr(int stages, int action);

}  // namespace ivdtr
