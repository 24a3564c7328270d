#pragma once

#include <vector>

#include "ivdtr/common.hpp"

namespace ivdtr {

/// Internal nodes send h[feature] < threshold to `left`; leaves carry a +/-1 label.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int label = 1;

    bool is_leaf() const { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

struct TreeRule {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    int input_dim = 0;

    int decide(Features h) const;
    int depth() const;
    void validate() const;
    bool operator==(const TreeRule&) const = default;
};

struct TreeFit {
    TreeRule tree;
    double loss = 0.0;         // weighted misclassification on the training data
    bool zero_weight = false;  // all weights were zero; tree is the +1 leaf
};

/// Weighted misclassification sum_i w_i 1{label_i != tree(x_i)}.
double weighted_loss(const TreeRule& tree, const Matrix& features, std::span<const int> labels,
                     std::span<const double> weights);

/// 1% of the total weight.
double default_min_leaf_weight(std::span<const double> weights);

/// Greedy top-down induction: each node takes the exhaustive best axis-aligned
/// split (midpoints between adjacent distinct values) under weighted
/// misclassification, and stops at `max_depth` or when no split lowers the loss.
TreeFit fit_weighted_tree(const Matrix& features, std::span<const int> labels,
                          std::span<const double> weights, int max_depth,
                          double min_leaf_weight = 0.0);

}  // namespace ivdtr
