#include <doctest.h>

#include <random>

#include "datasets.hpp"
#include "oracles.hpp"
#include "tabprompt/errors.hpp"
#include "tabprompt/tree.hpp"

using namespace tabprompt;

namespace {

const std::vector<std::vector<double>> kXorX = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
const std::vector<double> kXorY = {0, 1, 1, 0};

}  // namespace

TEST_CASE("gini and variance") {
    std::vector<int> balanced = {0, 0, 1, 1}, pure = {0, 0, 0}, three = {0, 1, 2};
    CHECK(gini(balanced) == 0.5);
    CHECK(gini(pure) == 0.0);
    CHECK(gini(three) == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    std::vector<int> none;
    CHECK_THROWS_AS(gini(none), MetricError);
    std::vector<double> v = {1, 2, 3, 4};
    CHECK(variance(v) == 1.25);
    std::vector<double> nov;
    CHECK_THROWS_AS(variance(nov), MetricError);
}

TEST_CASE("XOR is learned exactly at depth 2") {
    auto X = FeatureMatrix::from_rows(kXorX);
    for (int depth : {2, 3}) {
        auto m = fit_tree(X, kXorY, TreeParams{depth, 2, Criterion::gini}, Task::classification);
        CHECK(predict(m, X) == kXorY);
    }
    auto unlimited = fit_tree(X, kXorY, TreeParams{std::nullopt, 2, Criterion::gini}, Task::classification);
    CHECK(accuracy(kXorY, predict(unlimited, X)) == 1.0);
}

TEST_CASE("single-class targets give one leaf") {
    auto X = FeatureMatrix::from_rows({{1, 2}, {3, 4}, {5, 6}});
    std::vector<double> y = {1, 1, 1};
    auto m = fit_tree(X, y, TreeParams{}, Task::classification);
    REQUIRE(m.trees.size() == 1);
    CHECK(m.trees[0].nodes.size() == 1);
    CHECK(predict(m, X) == y);
}

TEST_CASE("unlimited trees memorize distinct rows") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<std::vector<double>> rows;
    std::vector<double> y;
    for (int i = 0; i < 60; ++i) {
        rows.push_back({u(rng), u(rng), u(rng)});
        y.push_back(u(rng) * 10);
    }
    auto X = FeatureMatrix::from_rows(rows);
    auto m = fit_tree(X, y, TreeParams{std::nullopt, 2, Criterion::variance}, Task::regression);
    CHECK(predict(m, X) == y);
    auto stump = fit_tree(X, y, TreeParams{0, 2, Criterion::variance}, Task::regression);
    auto p = predict(stump, X);
    for (double v : p) CHECK(v == p[0]);
}

TEST_CASE("root split agrees with exhaustive search") {
    std::mt19937_64 rng(31337);
    for (bool classification : {true, false}) {
        for (int trial = 0; trial < 200; ++trial) {
            auto d = testing::tiny_dataset(rng, classification);
            auto expected = oracle::best_split(d.rows, d.y, classification);
            const auto crit = classification ? Criterion::gini : Criterion::variance;
            const auto task = classification ? Task::classification : Task::regression;
            auto m = fit_tree(FeatureMatrix::from_rows(d.rows), d.y, TreeParams{1, 2, crit}, task);
            const auto& root = m.trees[0].nodes[0];
            if (!expected) {
                CHECK(root.is_leaf());
                continue;
            }
            REQUIRE_FALSE(root.is_leaf());
            CHECK(static_cast<std::size_t>(root.feature) == expected->feature);
            CHECK(root.threshold == expected->threshold);
        }
    }
}

TEST_CASE("fit preconditions") {
    auto X = FeatureMatrix::from_rows(kXorX);
    std::vector<double> short_y = {0, 1};
    CHECK_THROWS_AS(fit_tree(X, short_y, TreeParams{}, Task::classification), FitError);
    CHECK_THROWS_AS(fit_tree(X, kXorY, TreeParams{2, 2, Criterion::variance}, Task::classification), FitError);
    std::vector<double> frac = {0.5, 1, 1, 0};
    CHECK_THROWS_AS(fit_tree(X, frac, TreeParams{}, Task::classification), FitError);
    CHECK_THROWS_AS(fit_tree(X, kXorY, TreeParams{2, 1, Criterion::gini}, Task::classification), FitError);
    auto m = fit_tree(X, kXorY, TreeParams{}, Task::classification);
    CHECK_THROWS_AS(predict(m, FeatureMatrix::from_rows({{1, 2, 3}})), PredictError);
}

TEST_CASE("one tree without bootstrap is a plain tree") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::vector<double>> rows;
        std::vector<double> y;
        for (int i = 0; i < 40; ++i) {
            rows.push_back({double(rng() % 10), double(rng() % 7), double(rng() % 3)});
            y.push_back(double(rng() % 3));
        }
        auto X = FeatureMatrix::from_rows(rows);
        TreeParams tp{4, 2, Criterion::gini};
        ForestParams fp;
        fp.n_trees = 1;
        fp.tree = tp;
        fp.bootstrap = false;
        fp.features_per_split.kind = FeaturesPerSplit::Kind::all;
        fp.seed = rng();
        auto tree = fit_tree(X, y, tp, Task::classification);
        auto forest = fit_forest(X, y, fp, Task::classification);
        CHECK(forest.trees[0] == tree.trees[0]);
        CHECK(predict(forest, X) == predict(tree, X));
    }
}

TEST_CASE("forests are reproducible from their seed") {
    std::mt19937_64 rng(5);
    std::vector<std::vector<double>> rows;
    std::vector<double> y;
    for (int i = 0; i < 80; ++i) {
        rows.push_back({double(rng() % 10), double(rng() % 10), double(rng() % 10), double(rng() % 10)});
        y.push_back(rows.back()[0] + rows.back()[1] * 0.5);
    }
    auto X = FeatureMatrix::from_rows(rows);
    ForestParams fp;
    fp.n_trees = 25;
    fp.tree.criterion = Criterion::variance;
    fp.seed = 77;
    auto a = fit_forest(X, y, fp, Task::regression);
    auto b = fit_forest(X, y, fp, Task::regression);
    CHECK(a == b);
    fp.seed = 78;
    CHECK_FALSE(fit_forest(X, y, fp, Task::regression) == a);
}

TEST_CASE("majority vote breaks ties toward the lowest class") {
    auto leaf = [](double v) {
        Tree t;
        t.nodes.push_back(TreeNode{-1, 0.0, -1, -1, v, 1, 0.0});
        return t;
    };
    FittedModel m;
    m.kind = ModelKind::forest;
    m.task = Task::classification;
    m.n_features = 1;
    m.n_classes = 2;
    m.trees = {leaf(0), leaf(0), leaf(1)};
    auto X = FeatureMatrix::from_rows({{0.0}});
    CHECK(predict(m, X) == std::vector<double>{0});
    m.trees = {leaf(1), leaf(0)};
    CHECK(predict(m, X) == std::vector<double>{0});
    m.task = Task::regression;
    m.trees = {leaf(1), leaf(2), leaf(6)};
    CHECK(predict(m, X) == std::vector<double>{3});
}

TEST_CASE("metrics") {
    std::vector<double> t = {1, 2, 3}, p = {1, 2, 5};
    CHECK(accuracy(t, p) == doctest::Approx(2.0 / 3.0));
    CHECK(mean_squared_error(t, p) == doctest::Approx(4.0 / 3.0));
    std::vector<double> shorter = {1};
    CHECK_THROWS_AS(accuracy(t, shorter), MetricError);
    FeaturesPerSplit sqrt_k;
    CHECK(sqrt_k.resolve(10) == 3);
    CHECK(sqrt_k.resolve(1) == 1);
}
