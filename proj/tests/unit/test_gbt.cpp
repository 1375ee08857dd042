#include <doctest.h>

#include <cmath>

#include "support/oracles.hpp"
#include "tabfox/common.hpp"
#include "tabfox/gbt.hpp"
#include "tabfox/rng.hpp"

using namespace tabfox;

namespace {

double training_accuracy(const GbtModel& model, const Dataset& ds) {
    auto y = predict(model, ds);
    std::size_t ok = 0;
    for (std::size_t i = 0; i < y.size(); ++i) ok += (y[i] == ds.labels[i]);
    return static_cast<double>(ok) / static_cast<double>(y.size());
}

} // namespace

TEST_CASE("softmax gradients at simple logit vectors") {
    auto [g1, h1] = softmax_gradients(std::vector<double>{0, 0}, 0);
    CHECK(g1[0] == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(g1[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(h1[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(h1[1] == doctest::Approx(0.25).epsilon(1e-12));

    auto [g2, h2] = softmax_gradients(std::vector<double>{0, 0, 0}, 2);
    CHECK(g2[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(g2[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(g2[2] == doctest::Approx(-2.0 / 3.0).epsilon(1e-12));

    auto [g3, h3] = softmax_gradients(std::vector<double>{2, 0}, 0);
    CHECK(g3[0] == doctest::Approx(-0.1192).epsilon(1e-3));
    CHECK(g3[1] == doctest::Approx(0.1192).epsilon(1e-3));
}

TEST_CASE("gradient invariants: zero-sum g and bounded h") {
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t k = 2 + rng.uniform_int(5);
        std::vector<double> logits(k);
        for (double& v : logits) v = rng.uniform(-8, 8);
        int y = static_cast<int>(rng.uniform_int(k));
        auto [g, h] = softmax_gradients(logits, y);
        double g_sum = 0;
        for (double v : g) g_sum += v;
        CHECK(std::abs(g_sum) < 1e-12);
        for (double v : h) {
            CHECK(v >= 0.0);
            CHECK(v <= 0.25);
        }
    }
}

TEST_CASE("gradients match central finite differences") {
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t k = 2 + rng.uniform_int(4);
        std::vector<double> logits(k);
        for (double& v : logits) v = rng.uniform(-4, 4);
        int y = static_cast<int>(rng.uniform_int(k));
        auto [g, h] = softmax_gradients(logits, y);
        auto [g_fd, h_fd] = oracles::softmax_gradients_fd(logits, y);
        for (std::size_t i = 0; i < k; ++i) {
            CHECK(std::abs(g[i] - g_fd[i]) / std::max(1e-3, std::abs(g_fd[i])) < 1e-5);
            CHECK(std::abs(h[i] - h_fd[i]) / std::max(1e-3, std::abs(h_fd[i])) < 1e-5);
        }
    }
    CHECK_THROWS_AS(softmax_gradients(std::vector<double>{1.0, std::nan("")}, 0), Error);
}

TEST_CASE("split gain formula") {
    CHECK(split_gain(2, 3, -1, 2, 1, 0) == doctest::Approx(0.5833333333).epsilon(1e-5));
    CHECK(split_gain(0, 1, 0, 2, 1, 0.7) == doctest::Approx(-0.7).epsilon(1e-12));
    // symmetric under exchanging the children
    CHECK(split_gain(2, 3, -1, 2, 1.5, 0.2) == split_gain(-1, 2, 2, 3, 1.5, 0.2));
}

TEST_CASE("gbt reaches training accuracy 1.0 on the 40-point XOR data") {
    Dataset ds = oracles::xor_dataset(10, 2);
    GbtConfig cfg;
    cfg.n_rounds = 50;
    cfg.max_depth = 3;
    cfg.reg_lambda = 1.0;
    cfg.learning_rate = 0.3;
    cfg.subsample = 1.0;
    cfg.colsample = 1.0;
    cfg.seed = 5;

    std::vector<double> loss;
    GbtModel model = fit_gbt(ds, cfg, &loss);
    CHECK(training_accuracy(model, ds) == 1.0);
    REQUIRE(loss.size() == 50);
    CHECK(loss[9] < loss[0]); // round 10 beats round 1
    CHECK(predict(model, ds) == ds.labels);
}

TEST_CASE("fitting is deterministic") {
    Dataset ds = oracles::random_dataset(40, 4, 3, 13);
    GbtConfig cfg;
    cfg.n_rounds = 12;
    cfg.subsample = 0.8;
    cfg.colsample = 0.7;
    cfg.seed = 3;
    GbtModel a = fit_gbt(ds, cfg);
    GbtModel b = fit_gbt(ds, cfg);
    CHECK(gbt_to_json(a).dump() == gbt_to_json(b).dump());
}

TEST_CASE("a model with zero rounds predicts the class priors") {
    Dataset ds = oracles::random_dataset(30, 2, 3, 31);
    auto counts = class_distribution(ds);

    GbtModel empty;
    empty.n_classes = 3;
    empty.n_features = 2;
    for (std::size_t k = 0; k < 3; ++k) {
        empty.base_score.push_back(
            std::log(static_cast<double>(counts[k]) / static_cast<double>(ds.n_rows())));
    }
    auto proba = predict_proba(empty, ds.row(0));
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(proba[k] == doctest::Approx(static_cast<double>(counts[k]) /
                                          static_cast<double>(ds.n_rows()))
                              .epsilon(1e-12));
    }
}

TEST_CASE("probabilities sum to one for random rows") {
    Dataset ds = oracles::random_dataset(40, 5, 4, 19);
    GbtConfig cfg;
    cfg.n_rounds = 15;
    cfg.seed = 2;
    GbtModel model = fit_gbt(ds, cfg);
    Rng rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> row(5);
        for (double& v : row) v = rng.uniform(-6, 6);
        auto proba = predict_proba(model, row);
        double sum = 0;
        for (double p : proba) sum += p;
        CHECK(std::abs(sum - 1.0) < 1e-9);
    }
}

TEST_CASE("first-round splits attain the exhaustive maximum gain") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Dataset ds = oracles::random_dataset(8 + seed * 2, 1 + seed % 4, 2 + seed % 2, 100 + seed);
        GbtConfig cfg;
        cfg.n_rounds = 1;
        cfg.max_depth = 3;
        cfg.min_child_weight = 0.0;
        cfg.seed = seed;
        GbtModel model = fit_gbt(ds, cfg);

        // recompute round-0 gradients from the base logits
        auto counts = class_distribution(ds);
        std::vector<double> base(ds.n_classes());
        for (std::size_t k = 0; k < base.size(); ++k) {
            base[k] = std::log(std::max(static_cast<double>(counts[k]) /
                                            static_cast<double>(ds.n_rows()),
                                        1e-12));
        }
        std::vector<std::size_t> all_rows(ds.n_rows());
        std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});

        for (std::size_t k = 0; k < ds.n_classes(); ++k) {
            std::vector<double> g(ds.n_rows()), h(ds.n_rows());
            for (std::size_t r = 0; r < ds.n_rows(); ++r) {
                auto [gr, hr] = softmax_gradients(base, ds.labels[r]);
                g[r] = gr[k];
                h[r] = hr[k];
            }
            const Tree& tree = model.trees[0][k];
            auto sets = oracles::node_row_sets(tree, ds, all_rows);
            for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
                const TreeNode& node = tree.nodes[i];
                if (node.is_leaf()) continue;
                double achieved = oracles::split_gain_of(ds, sets[i], g, h, cfg.reg_lambda,
                                                         cfg.gamma, node.feature, node.threshold);
                double best =
                    oracles::best_split_gain(ds, sets[i], g, h, cfg.reg_lambda, cfg.gamma);
                CHECK(achieved == doctest::Approx(best).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("logits are additive in the individual tree outputs") {
    Dataset ds = oracles::random_dataset(30, 4, 3, 41);
    GbtConfig cfg;
    cfg.n_rounds = 8;
    cfg.seed = 6;
    GbtModel model = fit_gbt(ds, cfg);
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
        auto logits = predict_logits(model, ds.row(r));
        for (std::size_t k = 0; k < model.n_classes; ++k) {
            double expected = model.base_score[k];
            for (const auto& round_trees : model.trees) {
                expected += round_trees[k].evaluate(ds.row(r))[0];
            }
            CHECK(std::abs(logits[k] - expected) < 1e-12);
        }
    }
}

TEST_CASE("gbt serialization round-trips exactly") {
    Dataset ds = oracles::random_dataset(30, 4, 3, 57);
    GbtConfig cfg;
    cfg.n_rounds = 6;
    cfg.subsample = 0.9;
    cfg.seed = 4;
    GbtModel model = fit_gbt(ds, cfg);
    nlohmann::json j = gbt_to_json(model);
    GbtModel restored = gbt_from_json(j);
    CHECK(gbt_to_json(restored).dump() == j.dump());
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
        CHECK(predict_logits(model, ds.row(r)) == predict_logits(restored, ds.row(r)));
    }
}

TEST_CASE("single-class data is rejected") {
    Dataset ds = oracles::random_dataset(20, 3, 2, 61);
    for (int& y : ds.labels) y = 0;
    CHECK_THROWS_AS(fit_gbt(ds, GbtConfig{}), Error);
}

TEST_CASE("config validation") {
    GbtConfig cfg;
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = GbtConfig{};
    cfg.subsample = 1.2;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = GbtConfig{};
    cfg.reg_lambda = -1;
    CHECK_THROWS_AS(cfg.validate(), Error);
}
