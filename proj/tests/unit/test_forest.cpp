#include <doctest.h>

#include <cmath>

#include "support/oracles.hpp"
#include "tabfox/common.hpp"
#include "tabfox/forest.hpp"
#include "tabfox/parallel.hpp"
#include "tabfox/rng.hpp"

using namespace tabfox;

namespace {

// hand-built single-leaf tree predicting one class with probability 1
Tree pure_leaf_tree(std::size_t n_classes, std::size_t winner, double cover = 10) {
    Tree tree;
    TreeNode leaf;
    leaf.cover = cover;
    leaf.value.assign(n_classes, 0.0);
    leaf.value[winner] = 1.0;
    tree.nodes.push_back(leaf);
    return tree;
}

double training_accuracy(const ForestModel& model, const Dataset& ds) {
    auto y = predict(model, ds);
    std::size_t ok = 0;
    for (std::size_t i = 0; i < y.size(); ++i) ok += (y[i] == ds.labels[i]);
    return static_cast<double>(ok) / static_cast<double>(y.size());
}

} // namespace

TEST_CASE("single-class training data yields pure leaves everywhere") {
    Dataset ds = oracles::random_dataset(30, 3, 2, 1);
    for (int& y : ds.labels) y = 1;
    ForestConfig cfg;
    cfg.n_trees = 20;
    ForestModel model = fit_forest(ds, cfg);
    for (const auto& tree : model.trees) {
        for (const auto& node : tree.nodes) {
            REQUIRE(node.is_leaf());
            CHECK(node.value[1] == 1.0);
        }
    }
    CHECK(predict_proba(model, ds.row(0)) == std::vector<double>{0.0, 1.0});
}

TEST_CASE("forest reaches training accuracy 1.0 on the 40-point XOR data") {
    Dataset ds = oracles::xor_dataset(10, 2);
    ForestConfig cfg;
    cfg.n_trees = 50;
    cfg.max_depth = std::nullopt;
    cfg.seed = 5;
    ForestModel model = fit_forest(ds, cfg);
    CHECK(training_accuracy(model, ds) == 1.0);
}

TEST_CASE("fitting is deterministic and thread-count invariant") {
    Dataset ds = oracles::random_dataset(40, 4, 3, 7);
    ForestConfig cfg;
    cfg.n_trees = 30;
    cfg.seed = 11;

    set_thread_count(1);
    ForestModel a = fit_forest(ds, cfg);
    set_thread_count(4);
    ForestModel b = fit_forest(ds, cfg);
    set_thread_count(0);
    ForestModel c = fit_forest(ds, cfg);
    CHECK(forest_to_json(a).dump() == forest_to_json(b).dump());
    CHECK(forest_to_json(a).dump() == forest_to_json(c).dump());
}

TEST_CASE("soft voting averages per-tree distributions") {
    ForestModel model;
    model.n_classes = 3;
    model.n_features = 1;
    model.config.n_trees = 1;
    model.trees.push_back(pure_leaf_tree(3, 2));
    std::vector<double> row{0.0};
    CHECK(predict_proba(model, row) == std::vector<double>{0.0, 0.0, 1.0});

    ForestModel pair;
    pair.n_classes = 2;
    pair.n_features = 1;
    pair.config.n_trees = 2;
    pair.trees.push_back(pure_leaf_tree(2, 0));
    pair.trees.push_back(pure_leaf_tree(2, 1));
    auto proba = predict_proba(pair, row);
    CHECK(proba == std::vector<double>{0.5, 0.5});
}

TEST_CASE("probabilities sum to one on random rows") {
    Dataset ds = oracles::random_dataset(50, 5, 4, 3);
    ForestConfig cfg;
    cfg.n_trees = 40;
    cfg.seed = 1;
    ForestModel model = fit_forest(ds, cfg);
    Rng rng(99);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<double> row(5);
        for (double& v : row) v = rng.uniform(-6, 6);
        auto proba = predict_proba(model, row);
        double sum = 0;
        for (double p : proba) sum += p;
        CHECK(std::abs(sum - 1.0) < 1e-9);
    }
}

TEST_CASE("argmax prediction breaks ties toward the lower class index") {
    CHECK(argmax_class(std::vector<double>{0.2, 0.5, 0.3}) == 1);
    CHECK(argmax_class(std::vector<double>{0.5, 0.5}) == 0);
    CHECK(argmax_class(std::vector<double>{0.1, 0.4, 0.4, 0.1}) == 1);
}

TEST_CASE("batch prediction equals per-row prediction") {
    Dataset ds = oracles::random_dataset(30, 3, 3, 4);
    ForestConfig cfg;
    cfg.n_trees = 15;
    cfg.seed = 2;
    ForestModel model = fit_forest(ds, cfg);
    auto batch = predict(model, ds);
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
        CHECK(batch[r] == argmax_class(predict_proba(model, ds.row(r))));
    }
}

TEST_CASE("predict rejects malformed rows") {
    Dataset ds = oracles::random_dataset(20, 3, 2, 5);
    ForestConfig cfg;
    cfg.n_trees = 5;
    ForestModel model = fit_forest(ds, cfg);
    CHECK_THROWS_AS(predict_proba(model, std::vector<double>{1.0, 2.0}), Error);
    std::vector<double> bad{1.0, std::nan(""), 0.0};
    CHECK_THROWS_AS(predict_proba(model, bad), Error);
}

TEST_CASE("every chosen split attains the exhaustive maximum decrease") {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        Dataset ds = oracles::random_dataset(10 + seed * 2, 1 + seed % 4, 2 + seed % 2, seed);
        ForestConfig cfg;
        cfg.n_trees = 3;
        cfg.bootstrap = false;
        cfg.max_features_fraction = 1.0;
        cfg.min_samples_leaf = 1;
        cfg.max_depth = 4;
        cfg.seed = seed;
        ForestModel model = fit_forest(ds, cfg);

        std::vector<std::size_t> all_rows(ds.n_rows());
        std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});
        for (const auto& tree : model.trees) {
            auto sets = oracles::node_row_sets(tree, ds, all_rows);
            for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
                const TreeNode& node = tree.nodes[i];
                if (node.is_leaf()) continue;
                double achieved =
                    oracles::gini_decrease_of(ds, sets[i], node.feature, node.threshold);
                double best = oracles::best_gini_decrease(ds, sets[i], 1);
                CHECK(achieved == doctest::Approx(best).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("cover bookkeeping: internal covers equal the sum of child covers") {
    Dataset ds = oracles::random_dataset(60, 4, 3, 9);
    ForestConfig cfg;
    cfg.n_trees = 20;
    cfg.seed = 3;
    ForestModel model = fit_forest(ds, cfg);
    for (const auto& tree : model.trees) {
        CHECK(tree.nodes[0].cover == static_cast<double>(ds.n_rows()));
        for (const auto& node : tree.nodes) {
            if (node.is_leaf()) {
                CHECK(node.cover >= 1.0);
                double sum = 0;
                for (double p : node.value) sum += p;
                CHECK(std::abs(sum - 1.0) < 1e-12);
            } else {
                CHECK(node.cover == tree.nodes[static_cast<std::size_t>(node.left)].cover +
                                        tree.nodes[static_cast<std::size_t>(node.right)].cover);
            }
        }
    }
}

TEST_CASE("unlimited depth without bootstrap memorizes consistent data") {
    // duplicate-free rows, consistent labels, default sqrt feature subsetting:
    // the fallback scan must always find a usable split
    for (std::uint64_t seed = 30; seed < 36; ++seed) {
        Dataset ds = oracles::random_dataset(40, 5, 3, seed);
        ForestConfig cfg;
        cfg.n_trees = 10;
        cfg.bootstrap = false;
        cfg.min_samples_leaf = 1;
        cfg.seed = seed;
        ForestModel model = fit_forest(ds, cfg);
        CHECK(training_accuracy(model, ds) == 1.0);
    }
}

TEST_CASE("forest serialization round-trips exactly") {
    Dataset ds = oracles::random_dataset(35, 4, 3, 21);
    ForestConfig cfg;
    cfg.n_trees = 12;
    cfg.max_depth = 5;
    cfg.seed = 8;
    ForestModel model = fit_forest(ds, cfg);

    nlohmann::json j = forest_to_json(model);
    ForestModel restored = forest_from_json(j);
    CHECK(forest_to_json(restored).dump() == j.dump());
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
        CHECK(predict_proba(model, ds.row(r)) == predict_proba(restored, ds.row(r)));
    }
}

TEST_CASE("config validation") {
    ForestConfig cfg;
    cfg.n_trees = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = ForestConfig{};
    cfg.max_features_fraction = 1.5;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = ForestConfig{};
    cfg.min_samples_leaf = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    Dataset empty;
    CHECK_THROWS_AS(fit_forest(empty, ForestConfig{}), Error);
}
