#include <doctest.h>

#include <cmath>

#include "support/oracles.hpp"
#include "tabfox/common.hpp"
#include "tabfox/rng.hpp"
#include "tabfox/synthetic.hpp"
#include "tabfox/tune.hpp"

using namespace tabfox;

namespace {

Dataset separable_dataset(std::size_t n_rows, std::uint64_t seed) {
    Rng rng(seed);
    Dataset ds;
    ds.feature_names = {"a", "b"};
    ds.class_names = {"neg", "pos"};
    for (std::size_t i = 0; i < n_rows; ++i) {
        int y = static_cast<int>(i % 2);
        double offset = y == 0 ? -2.0 : 2.0;
        ds.values.push_back(offset + rng.uniform(-0.5, 0.5));
        ds.values.push_back(rng.uniform(-1, 1));
        ds.labels.push_back(y);
    }
    return ds;
}

} // namespace

TEST_CASE("decode maps the unit box onto parameter ranges") {
    SearchSpace space = default_gbt_space();
    auto lows = decode(std::vector<double>(space.dim(), 0.0), space);
    CHECK(lows["n_rounds"] == 20);
    CHECK(lows["learning_rate"] == doctest::Approx(1e-3).epsilon(1e-12));
    CHECK(lows["subsample"] == 0.5);

    auto highs = decode(std::vector<double>(space.dim(), 1.0), space);
    CHECK(highs["n_rounds"] == 300);
    CHECK(highs["learning_rate"] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(highs["gamma"] == 5.0);

    SearchSpace tiny;
    tiny.model_kind = ModelKind::Forest;
    tiny.params = {{"x", ParamKind::Real, 0.1, 0.5}, {"y", ParamKind::LogReal, 1e-3, 1e-1}};
    auto mid = decode({0.5, 0.5}, tiny);
    CHECK(mid["x"] == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(mid["y"] == doctest::Approx(1e-2).epsilon(1e-9));

    CHECK_THROWS_AS(decode({0.5}, space), Error);
}

TEST_CASE("decode of encode is the identity on integer grid points") {
    SearchSpace space = default_forest_space();
    for (double trees : {10.0, 57.0, 150.0, 300.0}) {
        std::map<std::string, double> params{{"n_trees", trees},
                                             {"max_depth", 7.0},
                                             {"min_samples_leaf", 3.0},
                                             {"max_features_fraction", 0.4}};
        auto decoded = decode(encode(params, space), space);
        CHECK(decoded["n_trees"] == trees);
        CHECK(decoded["max_depth"] == 7.0);
        CHECK(decoded["min_samples_leaf"] == 3.0);
        CHECK(decoded["max_features_fraction"] == doctest::Approx(0.4).epsilon(1e-12));
    }
}

TEST_CASE("search space validation") {
    SearchSpace space;
    space.params = {{"x", ParamKind::LogReal, 0.0, 1.0}};
    CHECK_THROWS_AS(space.validate(), Error);
    space.params = {{"x", ParamKind::Real, 1.0, 1.0}};
    CHECK_THROWS_AS(space.validate(), Error);
    space.params = {{"x", ParamKind::Real, 0, 1}, {"x", ParamKind::Real, 0, 1}};
    CHECK_THROWS_AS(space.validate(), Error);

    nlohmann::json j{{"model", "gbt"},
                     {"params", {{{"name", "n_rounds"}, {"kind", "integer"}, {"lo", 5}, {"hi", 50}}}}};
    SearchSpace parsed = search_space_from_json(j);
    CHECK(parsed.model_kind == ModelKind::Gbt);
    CHECK(parsed.params.size() == 1);
    SearchSpace back = search_space_from_json(search_space_to_json(parsed));
    CHECK(back.params[0].name == "n_rounds");
}

TEST_CASE("cv objective is bounded, deterministic, and strong on separable data") {
    Dataset ds = separable_dataset(40, 3);
    SearchSpace space = default_forest_space();
    Objective objective = cv_objective(ds, space, 5, 11);

    std::vector<double> x(space.dim(), 0.5);
    double v1 = objective(x);
    double v2 = objective(x);
    CHECK(v1 == v2);
    CHECK(v1 >= 0.0);
    CHECK(v1 <= 1.0);

    // n_trees at x=0 decodes to 10; a ten-tree forest nails this toy problem
    std::vector<double> low(space.dim(), 0.0);
    low[3] = 1.0; // all features available
    CHECK(objective(low) < 0.1);

    CHECK_THROWS_AS(cv_objective(ds, space, 1, 0), Error);
    CHECK_THROWS_AS(cv_objective(ds, space, 50, 0), Error);
}

TEST_CASE("singleton classes are pinned to the training folds") {
    Dataset ds = make_synthetic(); // two singleton classes
    SearchSpace space = default_forest_space();
    Objective objective = cv_objective(ds, space, 5, 2);
    std::vector<double> x(space.dim(), 0.25);
    double v = objective(x);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
}

TEST_CASE("tune never loses to the baseline and degenerate budgets work") {
    Dataset ds = separable_dataset(30, 5);
    FoxConfig fox;
    fox.pop_size = 2;
    fox.max_iters = 1;
    fox.seed = 3;
    TuneResult result = tune(ds, default_forest_space(), fox, 3, 3);
    CHECK(result.best_cv_score >= result.baseline_cv_score);
    CHECK(result.trace.size() == 2);
    CHECK(std::holds_alternative<ForestConfig>(result.best_config));

    nlohmann::json j = tune_result_to_json(result);
    CHECK(j.at("format") == "tabfox.tune");
    CHECK(j.at("best_cv_score").get<double>() == result.best_cv_score);
}

TEST_CASE("depth-limited tuning on XOR needs depth at least 2") {
    Dataset ds = oracles::xor_dataset(10, 7);
    SearchSpace space;
    space.model_kind = ModelKind::Forest;
    space.params = {{"max_depth", ParamKind::Integer, 1, 8}};
    FoxConfig fox;
    fox.pop_size = 6;
    fox.max_iters = 8;
    fox.seed = 1;
    TuneResult result = tune(ds, space, fox, 4, 1);
    CHECK(result.best_params["max_depth"] >= 2.0);
    CHECK(result.best_cv_score > 0.8); // a depth-1 forest cannot express XOR
}

TEST_CASE("tuning the gbt space improves or matches its baseline") {
    Dataset ds = separable_dataset(24, 9);
    FoxConfig fox;
    fox.pop_size = 4;
    fox.max_iters = 3;
    fox.seed = 7;
    TuneResult result = tune(ds, default_gbt_space(), fox, 3, 7);
    CHECK(result.best_cv_score >= result.baseline_cv_score);
    CHECK(std::holds_alternative<GbtConfig>(result.best_config));
    const auto& cfg = std::get<GbtConfig>(result.best_config);
    CHECK(cfg.n_rounds >= 20);
    CHECK(cfg.n_rounds <= 300);
    CHECK(cfg.learning_rate > 0.0);
}
