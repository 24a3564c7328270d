#include <doctest.h>

#include "ivdtr/tree.hpp"
#include "support.hpp"
#include "tree_oracle.hpp"

using namespace ivdtr;

namespace {

Matrix column(std::vector<double> v) {
    Matrix m(static_cast<Eigen::Index>(v.size()), 1);
    for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
    return m;
}

}  // namespace

TEST_CASE("tree: uniform labels give a single leaf") {
    const Matrix x = column({0.1, 0.4, 0.9});
    const std::vector<int> y{1, 1, 1};
    const std::vector<double> w{1.0, 2.0, 0.5};
    const auto fit = fit_weighted_tree(x, y, w, 2);
    CHECK(fit.tree.nodes.size() == 1);
    CHECK(fit.tree.nodes[0].label == 1);
    CHECK(fit.loss == 0.0);
    CHECK_FALSE(fit.zero_weight);
}

TEST_CASE("tree: a step at 0.3 is found with depth 1") {
    const Matrix x = column({0.05, 0.2, 0.28, 0.32, 0.6, 0.95});
    std::vector<int> y;
    for (Eigen::Index i = 0; i < x.rows(); ++i) y.push_back(x(i, 0) < 0.3 ? -1 : 1);
    const std::vector<double> w(6, 1.0);
    const auto fit = fit_weighted_tree(x, y, w, 1);
    REQUIRE(fit.tree.nodes.size() == 3);
    CHECK(fit.tree.nodes[0].threshold > 0.28);
    CHECK(fit.tree.nodes[0].threshold < 0.32);
    CHECK(fit.loss == 0.0);
    CHECK(fit.tree.depth() == 1);
}

TEST_CASE("tree: all-zero weights give the +1 leaf and the flag") {
    const auto fit = fit_weighted_tree(column({0.1, 0.2}), std::vector<int>{-1, -1},
                                       std::vector<double>{0.0, 0.0}, 2);
    CHECK(fit.zero_weight);
    REQUIRE(fit.tree.nodes.size() == 1);
    CHECK(fit.tree.nodes[0].label == 1);
}

TEST_CASE("tree: equal class weight at a leaf labels +1") {
    const auto fit = fit_weighted_tree(column({0.5, 0.5}), std::vector<int>{-1, 1},
                                       std::vector<double>{1.0, 1.0}, 2);
    CHECK(fit.tree.nodes.size() == 1);
    CHECK(fit.tree.nodes[0].label == 1);
}

TEST_CASE("tree: decide on a hand-built tree") {
    TreeRule t;
    t.input_dim = 2;
    t.nodes = {TreeNode{0, 0.5, 1, 2, 1}, TreeNode{-1, 0, -1, -1, -1}, TreeNode{-1, 0, -1, -1, 1}};
    const double a[2] = {0.7, 0.0};
    const double b[2] = {0.2, 9.0};
    const double c[2] = {0.5, 0.0};
    CHECK(t.decide(a) == 1);
    CHECK(t.decide(b) == -1);
    CHECK(t.decide(c) == 1);  // ties go right
    const double short_h[1] = {0.1};
    CHECK_THROWS_AS(t.decide(short_h), Error);
    CHECK_NOTHROW(t.validate());
    t.nodes[0].feature = 2;
    CHECK_THROWS_AS(t.validate(), Error);
}

TEST_CASE("tree: input validation") {
    const Matrix x = column({0.1, 0.2});
    CHECK_THROWS_AS(fit_weighted_tree(x, std::vector<int>{1}, std::vector<double>{1, 1}, 1), Error);
    CHECK_THROWS_AS(fit_weighted_tree(x, std::vector<int>{1, 0}, std::vector<double>{1, 1}, 1), Error);
    CHECK_THROWS_AS(fit_weighted_tree(x, std::vector<int>{1, -1}, std::vector<double>{1, -1}, 1), Error);
    CHECK_THROWS_AS(fit_weighted_tree(x, std::vector<int>{1, -1}, std::vector<double>{1, 1}, -1), Error);
}

TEST_CASE("tree: reported loss matches a recount and depth 2 never loses to depth 1") {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 200; ++rep) {
        const int n = 5 + static_cast<int>(rng() % 30);
        Matrix x(n, 2);
        std::vector<int> y(static_cast<std::size_t>(n));
        std::vector<double> w(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            x(i, 0) = testing::uniform(rng);
            x(i, 1) = testing::uniform(rng);
            y[static_cast<std::size_t>(i)] = testing::coin(rng);
            w[static_cast<std::size_t>(i)] = testing::uniform(rng);
        }
        const auto f1 = fit_weighted_tree(x, y, w, 1);
        const auto f2 = fit_weighted_tree(x, y, w, 2);
        CHECK(f2.loss <= f1.loss + 1e-12);
        CHECK(f2.loss == doctest::Approx(weighted_loss(f2.tree, x, y, w)));
        CHECK(f2.tree.depth() <= 2);
    }
}

TEST_CASE("tree: greedy is never below the exhaustive depth-2 optimum") {
    std::mt19937_64 rng(17);
    for (int rep = 0; rep < 150; ++rep) {
        const int n = 4 + static_cast<int>(rng() % 7);
        Matrix x(n, 2);
        std::vector<int> y(static_cast<std::size_t>(n));
        std::vector<double> w(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            x(i, 0) = testing::uniform(rng);
            x(i, 1) = testing::uniform(rng);
            y[static_cast<std::size_t>(i)] = testing::coin(rng);
            w[static_cast<std::size_t>(i)] = 0.1 + testing::uniform(rng);
        }
        const auto fit = fit_weighted_tree(x, y, w, 2);
        CHECK(fit.loss >= testing::best_tree_loss(x, y, w, 2) - 1e-12);
    }
}

TEST_CASE("tree: greedy matches the exhaustive optimum on the planted corpus") {
    const auto corpus = testing::curated_tree_corpus(60, 2024);
    for (const auto& t : corpus) {
        const auto fit = fit_weighted_tree(t.x, t.y, t.w, 2);
        CHECK(fit.loss == doctest::Approx(testing::best_tree_loss(t.x, t.y, t.w, 2)).epsilon(1e-9));
        CHECK(fit.loss <= 1e-12);
    }
}

TEST_CASE("tree: top-down search can stop short of the depth-2 optimum") {
    // Labels + + - + + + on a line: no single split lowers the error of the +1 leaf,
    // yet two splits isolate the lone -1.
    const Matrix x = column({1, 2, 3, 4, 5, 6});
    const std::vector<int> y{1, 1, -1, 1, 1, 1};
    const std::vector<double> w(6, 1.0);
    const auto fit = fit_weighted_tree(x, y, w, 2);
    CHECK(fit.loss == 1.0);
    CHECK(testing::best_tree_loss(x, y, w, 2) == 0.0);
}

TEST_CASE("tree: min leaf weight blocks thin splits") {
    const Matrix x = column({0.1, 0.2, 0.3, 0.4});
    const std::vector<int> y{-1, 1, 1, 1};
    const std::vector<double> w{1.0, 1.0, 1.0, 1.0};
    CHECK(fit_weighted_tree(x, y, w, 1, 0.0).loss == 0.0);
    const auto blocked = fit_weighted_tree(x, y, w, 1, 1.5);
    CHECK(blocked.tree.nodes.size() == 1);
    CHECK(default_min_leaf_weight(w) == doctest::Approx(0.04));
}

TEST_CASE("known gap: greedy equals the exhaustive optimum on random n = 10" *
          doctest::test_suite("gaps")) {
    std::mt19937_64 rng(10);
    int mismatches = 0;
    for (int rep = 0; rep < 100; ++rep) {
        Matrix x(10, 2);
        std::vector<int> y(10);
        std::vector<double> w(10);
        for (int i = 0; i < 10; ++i) {
            x(i, 0) = testing::uniform(rng);
            x(i, 1) = testing::uniform(rng);
            y[static_cast<std::size_t>(i)] = testing::coin(rng);
            w[static_cast<std::size_t>(i)] = 0.1 + testing::uniform(rng);
        }
        const double greedy = fit_weighted_tree(x, y, w, 2).loss;
        mismatches += greedy > testing::best_tree_loss(x, y, w, 2) + 1e-12;
    }
    CHECK(mismatches == 0);
}

TEST_CASE("known gap: depth ceil(log2 n) shatters distinct points" * doctest::test_suite("gaps")) {
    std::mt19937_64 rng(8);
    int failures = 0;
    for (int rep = 0; rep < 200; ++rep) {
        const int n = 2 + static_cast<int>(rng() % 7);
        Matrix x(n, 1);
        std::vector<int> y(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            x(i, 0) = i;
            y[static_cast<std::size_t>(i)] = testing::coin(rng);
        }
        const int depth = static_cast<int>(std::ceil(std::log2(n)));
        failures += fit_weighted_tree(x, y, std::vector<double>(static_cast<std::size_t>(n), 1.0),
                                      depth)
                        .loss > 0.0;
    }
    CHECK(failures == 0);
}

TEST_CASE("tree: shattering holds when every split strictly helps") {
    // Alternating blocks where each greedy cut removes error.
    const Matrix x = column({1, 2, 3, 4, 5, 6, 7, 8});
    const std::vector<int> y{-1, -1, -1, 1, 1, 1, 1, -1};
    const auto fit = fit_weighted_tree(x, y, std::vector<double>(8, 1.0), 3);
    CHECK(fit.loss == 0.0);
    CHECK(testing::best_tree_loss(x, y, std::vector<double>(8, 1.0), 3) == 0.0);
}
