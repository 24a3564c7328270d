#include "ivdtr/tree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace ivdtr {

int TreeRule::decide(Features h) const {
    require(static_cast<int>(h.size()) == input_dim, "history dimension mismatch for tree rule");
    require(!nodes.empty(), "empty tree");
    int at = 0;
    while (!nodes[at].is_leaf()) {
        const auto& nd = nodes[at];
        at = h[static_cast<std::size_t>(nd.feature)] < nd.threshold ? nd.left : nd.right;
    }
    return nodes[at].label;
}

int TreeRule::depth() const {
    std::function<int(int)> walk = [&](int i) -> int {
        const auto& nd = nodes[static_cast<std::size_t>(i)];
        return nd.is_leaf() ? 0 : 1 + std::max(walk(nd.left), walk(nd.right));
    };
    return nodes.empty() ? 0 : walk(0);
}

void TreeRule::validate() const {
    require(!nodes.empty(), "tree has no nodes");
    const int count = static_cast<int>(nodes.size());
    for (const auto& nd : nodes) {
        if (nd.is_leaf()) {
            require(nd.label == 1 || nd.label == -1, "tree leaf label not in {-1,+1}");
        } else {
            require(nd.feature < input_dim, "tree feature index out of range");
            require(nd.left > 0 && nd.left < count && nd.right > 0 && nd.right < count,
                    "tree child index out of range");
            require(std::isfinite(nd.threshold), "tree threshold is not finite");
        }
    }
}

double weighted_loss(const TreeRule& tree, const Matrix& x, std::span<const int> labels,
                     std::span<const double> weights) {
    double loss = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const auto u = static_cast<std::size_t>(i);
        if (tree.decide(row_of(x, i)) != labels[u]) loss += weights[u];
    }
    return loss;
}

double default_min_leaf_weight(std::span<const double> weights) {
    return 0.01 * std::accumulate(weights.begin(), weights.end(), 0.0);
}

namespace {

struct Builder {
    const Matrix& x;
    std::span<const int> labels;
    std::span<const double> weights;
    int max_depth;
    double min_leaf;
    double eps;
    TreeRule tree;

    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double loss = 0.0;
    };

    std::pair<double, double> class_weights(const std::vector<std::size_t>& idx) const {
        double wp = 0.0;
        double wm = 0.0;
        for (auto i : idx) (labels[i] > 0 ? wp : wm) += weights[i];
        return {wp, wm};
    }

    Split best_split(const std::vector<std::size_t>& idx) const {
        Split best;
        best.loss = std::numeric_limits<double>::infinity();
        const auto [tot_p, tot_m] = class_weights(idx);
        std::vector<std::size_t> order(idx);
        for (Eigen::Index f = 0; f < x.cols(); ++f) {
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return x(static_cast<Eigen::Index>(a), f) < x(static_cast<Eigen::Index>(b), f);
            });
            double lp = 0.0;
            double lm = 0.0;
            for (std::size_t pos = 0; pos + 1 < order.size(); ++pos) {
                const auto i = order[pos];
                (labels[i] > 0 ? lp : lm) += weights[i];
                const double v = x(static_cast<Eigen::Index>(i), f);
                const double next = x(static_cast<Eigen::Index>(order[pos + 1]), f);
                if (!(v < next)) continue;
                const double rp = tot_p - lp;
                const double rm = tot_m - lm;
                if (lp + lm < min_leaf || rp + rm < min_leaf) continue;
                const double loss = std::min(lp, lm) + std::min(rp, rm);
                if (loss < best.loss) {
                    best = {static_cast<int>(f), 0.5 * (v + next), loss};
                }
            }
        }
        return best;
    }

    int grow(const std::vector<std::size_t>& idx, int depth) {
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        const auto [wp, wm] = class_weights(idx);
        tree.nodes[id].label = wp >= wm ? 1 : -1;
        const double node_loss = std::min(wp, wm);
        if (depth >= max_depth || node_loss <= 0.0) return id;

        const Split s = best_split(idx);
        if (s.feature < 0 || !(s.loss < node_loss - eps)) return id;

        std::vector<std::size_t> left;
        std::vector<std::size_t> right;
        for (auto i : idx) {
            (x(static_cast<Eigen::Index>(i), s.feature) < s.threshold ? left : right).push_back(i);
        }
        const int l = grow(left, depth + 1);
        const int r = grow(right, depth + 1);
        auto& nd = tree.nodes[id];
        nd.feature = s.feature;
        nd.threshold = s.threshold;
        nd.left = l;
        nd.right = r;
        return id;
    }
};

}  // namespace

TreeFit fit_weighted_tree(const Matrix& x, std::span<const int> labels,
                          std::span<const double> weights, int max_depth,
                          double min_leaf_weight) {
    require(static_cast<Eigen::Index>(labels.size()) == x.rows() &&
                static_cast<Eigen::Index>(weights.size()) == x.rows(),
            "tree input length mismatch");
    require(max_depth >= 0, "tree depth must be >= 0");
    for (int l : labels) require(l == 1 || l == -1, "tree labels must be +/-1");
    for (double w : weights) require(std::isfinite(w) && w >= 0.0, "tree weights must be >= 0");

    TreeFit fit;
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (x.rows() == 0 || total <= 0.0) {
        fit.tree.input_dim = static_cast<int>(x.cols());
        fit.tree.nodes.push_back(TreeNode{});
        fit.zero_weight = true;
        return fit;
    }

    Builder b{x, labels, weights, max_depth, std::max(0.0, min_leaf_weight), 1e-12 * total, {}};
    b.tree.input_dim = static_cast<int>(x.cols());
    std::vector<std::size_t> all(static_cast<std::size_t>(x.rows()));
    std::iota(all.begin(), all.end(), std::size_t{0});
    b.grow(all, 0);
    fit.tree = std::move(b.tree);
    fit.loss = weighted_loss(fit.tree, x, labels, weights);
    return fit;
}

}  // namespace ivdtr
