#include <doctest.h>

#include <cmath>

#include "support/oracles.hpp"
#include "tabfox/common.hpp"
#include "tabfox/explain.hpp"
#include "tabfox/rng.hpp"

using namespace tabfox;

namespace {

// stump: split on feature 0 at 0, covers 30/70, pure leaf distributions
ForestModel cover_stump() {
    ForestModel model;
    model.n_classes = 2;
    model.n_features = 2;
    model.config.n_trees = 1;
    Tree tree;
    TreeNode root;
    root.feature = 0;
    root.threshold = 0.0;
    root.cover = 100;
    root.left = 1;
    root.right = 2;
    TreeNode left, right;
    left.cover = 30;
    left.value = {1.0, 0.0};
    right.cover = 70;
    right.value = {0.0, 1.0};
    tree.nodes = {root, left, right};
    model.trees.push_back(tree);
    return model;
}

std::vector<std::size_t> all_features(std::size_t m) {
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
}

} // namespace

TEST_CASE("full knowledge reproduces predict_proba exactly") {
    Dataset ds = oracles::random_dataset(30, 4, 3, 71);
    ForestConfig fcfg;
    fcfg.n_trees = 20;
    fcfg.seed = 1;
    ForestModel forest = fit_forest(ds, fcfg);
    GbtConfig gcfg;
    gcfg.n_rounds = 8;
    gcfg.seed = 1;
    GbtModel gbt = fit_gbt(ds, gcfg);

    for (std::size_t r = 0; r < 5; ++r) {
        std::vector<double> row(ds.row(r).begin(), ds.row(r).end());
        auto known = all_features(4);
        auto ev_f = expected_value_subset(forest, row, known);
        auto pp_f = predict_proba(forest, row);
        auto ev_g = expected_value_subset(gbt, row, known);
        auto pp_g = predict_proba(gbt, row);
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(std::abs(ev_f[k] - pp_f[k]) < 1e-12);
            CHECK(std::abs(ev_g[k] - pp_g[k]) < 1e-12);
        }
    }
}

TEST_CASE("empty knowledge on the 30/70 stump gives the cover-weighted mean") {
    ForestModel model = cover_stump();
    std::vector<double> row{-1.0, 0.5};
    auto value = expected_value_subset(model, row, {});
    CHECK(value[0] == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(value[1] == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("features outside every split never change the expectation") {
    ForestModel model = cover_stump(); // feature 1 unused
    std::vector<double> row{-1.0, 123.0};
    auto without = expected_value_subset(model, row, {0});
    auto with = expected_value_subset(model, row, {0, 1});
    CHECK(without == with);

    Explanation ex = shapley_values(model, row);
    CHECK(ex.contributions[1][0] == 0.0);
    CHECK(ex.contributions[1][1] == 0.0);
}

TEST_CASE("one-player game: the only used feature takes the whole gap") {
    ForestModel model = cover_stump();
    std::vector<double> row{-1.0, 0.0};
    Explanation ex = shapley_values(model, row);
    auto proba = predict_proba(model, row);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(ex.contributions[0][k] ==
              doctest::Approx(proba[k] - ex.base_value[k]).epsilon(1e-12));
        CHECK(ex.predicted_output[k] == doctest::Approx(proba[k]).epsilon(1e-12));
    }
}

TEST_CASE("efficiency holds per class on fitted models") {
    Dataset ds = oracles::random_dataset(40, 5, 3, 81);
    ForestConfig fcfg;
    fcfg.n_trees = 25;
    fcfg.seed = 2;
    ForestModel forest = fit_forest(ds, fcfg);
    GbtConfig gcfg;
    gcfg.n_rounds = 10;
    gcfg.seed = 2;
    GbtModel gbt = fit_gbt(ds, gcfg);

    for (std::size_t r = 0; r < 8; ++r) {
        Explanation ef = shapley_values(forest, ds.row(r));
        auto proba = predict_proba(forest, ds.row(r));
        for (std::size_t k = 0; k < 3; ++k) {
            double reconstructed = ef.base_value[k];
            for (const auto& per_feature : ef.contributions) reconstructed += per_feature[k];
            CHECK(std::abs(reconstructed - proba[k]) < 1e-9);
        }

        // gbt efficiency is stated in logit space
        Explanation eg = shapley_values(gbt, ds.row(r));
        auto logits = predict_logits(gbt, ds.row(r));
        for (std::size_t k = 0; k < 3; ++k) {
            double reconstructed = eg.base_value[k];
            for (const auto& per_feature : eg.contributions) reconstructed += per_feature[k];
            CHECK(std::abs(reconstructed - logits[k]) < 1e-9);
            CHECK(std::abs(eg.predicted_output[k] - logits[k]) < 1e-12);
        }
    }
}

TEST_CASE("exact contributions match the brute-force enumerator") {
    Dataset ds = oracles::random_dataset(20, 3, 2, 91);
    ForestConfig cfg;
    cfg.n_trees = 10;
    cfg.seed = 3;
    ForestModel forest = fit_forest(ds, cfg);
    for (std::size_t r = 0; r < ds.n_rows(); r += 4) {
        std::vector<double> row(ds.row(r).begin(), ds.row(r).end());
        Explanation ex = shapley_values(forest, row);
        auto brute = oracles::brute_force_shapley(forest, row);
        for (std::size_t j = 0; j < 3; ++j) {
            for (std::size_t k = 0; k < 2; ++k) {
                CHECK(std::abs(ex.contributions[j][k] - brute[j][k]) < 1e-9);
            }
        }
    }

    GbtConfig gcfg;
    gcfg.n_rounds = 5;
    gcfg.seed = 3;
    GbtModel gbt = fit_gbt(ds, gcfg);
    std::vector<double> row(ds.row(1).begin(), ds.row(1).end());
    Explanation ex = shapley_values(gbt, row);
    auto brute = oracles::brute_force_shapley(gbt, row);
    for (std::size_t j = 0; j < 3; ++j) {
        for (std::size_t k = 0; k < 2; ++k) {
            CHECK(std::abs(ex.contributions[j][k] - brute[j][k]) < 1e-9);
        }
    }
}

TEST_CASE("duplicated columns are interchangeable for a symmetric ensemble") {
    // two identical stumps, one splitting on each copy
    ForestModel model;
    model.n_classes = 2;
    model.n_features = 2;
    model.config.n_trees = 2;
    for (int f = 0; f < 2; ++f) {
        Tree tree;
        TreeNode root;
        root.feature = f;
        root.threshold = 0.0;
        root.cover = 50;
        root.left = 1;
        root.right = 2;
        TreeNode left, right;
        left.cover = 20;
        left.value = {0.9, 0.1};
        right.cover = 30;
        right.value = {0.2, 0.8};
        tree.nodes = {root, left, right};
        model.trees.push_back(tree);
    }
    std::vector<double> row{-1.0, -1.0}; // identical copies

    // v(S + {i}) == v(S + {j}) for every S excluding both
    auto v_i = expected_value_subset(model, row, {0});
    auto v_j = expected_value_subset(model, row, {1});
    CHECK(v_i == v_j);

    Explanation ex = shapley_values(model, row);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(ex.contributions[0][k] == doctest::Approx(ex.contributions[1][k]).epsilon(1e-12));
    }
}

TEST_CASE("sampling mode keeps efficiency and dummy features at zero") {
    Dataset ds = oracles::random_dataset(50, 18, 3, 95);
    // plant a constant column so it can never be split on
    for (std::size_t r = 0; r < ds.n_rows(); ++r) ds.values[r * 18 + 17] = 1.0;
    ForestConfig cfg;
    cfg.n_trees = 10;
    cfg.seed = 5;
    ForestModel forest = fit_forest(ds, cfg);

    ExplainOptions opts;
    opts.max_features_exact = 15; // 18 features forces sampling
    opts.n_permutations = 20;
    opts.seed = 11;
    Explanation ex = shapley_values(forest, ds.row(0), opts);
    CHECK_FALSE(ex.exact);
    CHECK(ex.n_permutations == 20);

    auto proba = predict_proba(forest, ds.row(0));
    for (std::size_t k = 0; k < 3; ++k) {
        double reconstructed = ex.base_value[k];
        for (const auto& per_feature : ex.contributions) reconstructed += per_feature[k];
        CHECK(std::abs(reconstructed - proba[k]) < 1e-9);
        CHECK(ex.contributions[17][k] == 0.0);
    }

    Explanation again = shapley_values(forest, ds.row(0), opts);
    CHECK(again.contributions == ex.contributions); // seeded determinism

    opts.allow_sampling = false;
    CHECK_THROWS_AS(shapley_values(forest, ds.row(0), opts), Error);
}

TEST_CASE("summary ranking averages absolute contributions") {
    Explanation ex;
    ex.base_value = {0.0};
    ex.predicted_output = {0.0};
    ex.contributions = {{0.2}, {-0.4}};
    SummaryRanking ranking = summary_ranking({ex});
    CHECK(ranking.values[0] == doctest::Approx(0.2));
    CHECK(ranking.values[1] == doctest::Approx(0.4));
    CHECK(ranking.order == std::vector<std::size_t>{1, 0});

    Explanation ex2 = ex;
    ex2.contributions = {{0.6}, {0.0}};
    SummaryRanking merged = summary_ranking({ex, ex2});
    CHECK(merged.values[0] == doctest::Approx(0.4)); // (0.2 + 0.6) / 2
    CHECK(merged.values[1] == doctest::Approx(0.2)); // (0.4 + 0.0) / 2

    // all-zero feature ranks last
    Explanation ex3 = ex;
    ex3.contributions = {{0.5}, {0.0}};
    SummaryRanking zero = summary_ranking({ex3});
    CHECK(zero.order.back() == 1);
    CHECK(zero.values[1] == 0.0);

    CHECK_THROWS_AS(summary_ranking({}), Error);
}

TEST_CASE("emission formats are stable") {
    ForestModel model = cover_stump();
    std::vector<double> row{-1.0, 0.0};
    Explanation ex = shapley_values(model, row);
    std::vector<std::string> features{"alpha", "beta"};
    std::vector<std::string> classes{"no", "yes"};

    std::string csv = contributions_to_csv({ex}, {0}, features, classes);
    CHECK(csv.rfind("row,feature,class,value\n", 0) == 0);
    CHECK(csv.find("alpha") != std::string::npos);

    SummaryRanking ranking = summary_ranking({ex});
    std::string summary_csv = summary_to_csv(ranking, features);
    CHECK(summary_csv.rfind("feature,mean_abs_contribution,rank\n", 0) == 0);

    std::string text = summary_to_text(ranking, features);
    CHECK(text.find('#') != std::string::npos);

    nlohmann::json j = explanations_to_json({ex}, {0}, features, classes);
    CHECK(j.at("samples").size() == 1);
}
