#include <doctest.h>

#include <cmath>

#include "support/oracles.hpp"
#include "tabfox/common.hpp"
#include "tabfox/preprocess.hpp"
#include "tabfox/rng.hpp"
#include "tabfox/synthetic.hpp"

using namespace tabfox;

namespace {

Dataset two_feature_dataset(const std::vector<double>& f1, const std::vector<double>& f2,
                            const std::vector<int>& labels, int n_classes = 2) {
    Dataset ds;
    ds.feature_names = {"f1", "f2"};
    for (int c = 0; c < n_classes; ++c) ds.class_names.push_back(std::string(1, char('A' + c)));
    for (std::size_t i = 0; i < f1.size(); ++i) {
        ds.values.push_back(f1[i]);
        ds.values.push_back(f2[i]);
        ds.labels.push_back(labels[i]);
    }
    ds.validate();
    return ds;
}

Dataset single_column(const std::vector<double>& column) {
    Dataset ds;
    ds.feature_names = {"f"};
    ds.class_names = {"A"};
    for (double v : column) {
        ds.values.push_back(v);
        ds.labels.push_back(0);
    }
    return ds;
}

} // namespace

TEST_CASE("gini impurity basics") {
    CHECK(gini_impurity({10, 0}) == 0.0);
    CHECK(gini_impurity({5, 5}) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(gini_impurity({2, 1, 1}) == doctest::Approx(0.625).epsilon(1e-12));
    CHECK(gini_impurity({7}) == 0.0);
    CHECK(gini_impurity({3, 3, 3}) < 1.0);
    CHECK_THROWS_AS(gini_impurity({0, 0}), Error);
}

TEST_CASE("constant features score zero, informative ones positive") {
    Rng rng(3);
    std::vector<double> f1, f2;
    std::vector<int> labels;
    for (int i = 0; i < 60; ++i) {
        double v = rng.uniform(-2, 2);
        f1.push_back(v);
        f2.push_back(4.2);
        labels.push_back(v > 0 ? 1 : 0);
    }
    Dataset ds = two_feature_dataset(f1, f2, labels);
    GiniRanking ranking = rank_features_gini(ds, importance_forest_defaults(), 0);
    CHECK(ranking.scores[0] > 0.0);
    CHECK(ranking.scores[1] == 0.0);
    CHECK(ranking.order[0] == 0);
}

TEST_CASE("a label-copy feature dominates noise across seeds") {
    Rng rng(9);
    std::vector<double> noise, copy;
    std::vector<int> labels;
    for (int i = 0; i < 50; ++i) {
        int y = i % 2;
        noise.push_back(rng.uniform(-1, 1));
        copy.push_back(static_cast<double>(y));
        labels.push_back(y);
    }
    Dataset ds = two_feature_dataset(noise, copy, labels);
    ForestConfig cfg = importance_forest_defaults();
    cfg.n_trees = 50;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        GiniRanking ranking = rank_features_gini(ds, cfg, seed);
        CHECK(ranking.order[0] == 1);
    }
    // with all features available, every root split must pick the label copy
    cfg.max_features_fraction = 1.0;
    cfg.bootstrap = false;
    cfg.n_trees = 10;
    ForestModel forest = fit_forest(ds, cfg);
    for (const auto& tree : forest.trees) CHECK(tree.nodes[0].feature == 1);
}

TEST_CASE("ranking breaks score ties by lower feature index") {
    Rng rng(5);
    Dataset ds;
    ds.feature_names = {"const_a", "signal", "const_b"};
    ds.class_names = {"A", "B"};
    for (int i = 0; i < 40; ++i) {
        double v = rng.uniform(-1, 1);
        ds.values.push_back(1.0);
        ds.values.push_back(v);
        ds.values.push_back(2.0);
        ds.labels.push_back(v > 0 ? 1 : 0);
    }
    GiniRanking ranking = rank_features_gini(ds, importance_forest_defaults(), 1);
    REQUIRE(ranking.order.size() == 3);
    CHECK(ranking.order[0] == 1);
    CHECK(ranking.order[1] == 0); // both constants score 0; lower index first
    CHECK(ranking.order[2] == 2);
}

TEST_CASE("importance scores sum to the mean total impurity decrease per tree") {
    Dataset ds = make_synthetic(60, 6, 3);
    ForestConfig cfg = importance_forest_defaults();
    cfg.n_trees = 25;
    GiniRanking ranking = rank_features_gini(ds, cfg, 4);

    for (double s : ranking.scores) CHECK(s >= 0.0);

    // independent recomputation from a forest fitted with the same seed
    ForestConfig fit_cfg = cfg;
    fit_cfg.seed = 4;
    ForestModel forest = fit_forest(ds, fit_cfg);
    double score_sum = 0.0;
    for (double s : ranking.scores) score_sum += s;

    // recompute mean total decrease by re-walking the fitted trees' stored stats
    double decrease_sum = 0.0;
    for (const auto& tree : forest.trees) {
        std::vector<std::vector<double>> counts(tree.nodes.size());
        for (std::size_t i = tree.nodes.size(); i-- > 0;) {
            const TreeNode& node = tree.nodes[i];
            if (node.is_leaf()) {
                counts[i].resize(node.value.size());
                for (std::size_t k = 0; k < node.value.size(); ++k) {
                    counts[i][k] = node.value[k] * node.cover;
                }
            } else {
                counts[i].resize(counts[static_cast<std::size_t>(node.left)].size());
                for (std::size_t k = 0; k < counts[i].size(); ++k) {
                    counts[i][k] = counts[static_cast<std::size_t>(node.left)][k] +
                                   counts[static_cast<std::size_t>(node.right)][k];
                }
            }
        }
        auto impurity = [](const std::vector<double>& c, double total_count) {
            double sum_sq = 0;
            for (double v : c) sum_sq += (v / total_count) * (v / total_count);
            return 1.0 - sum_sq;
        };
        double root_cover = tree.nodes[0].cover;
        for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
            const TreeNode& node = tree.nodes[i];
            if (node.is_leaf()) continue;
            double nl = tree.nodes[static_cast<std::size_t>(node.left)].cover;
            double nr = tree.nodes[static_cast<std::size_t>(node.right)].cover;
            double d = impurity(counts[i], node.cover) -
                       (nl / node.cover) * impurity(counts[static_cast<std::size_t>(node.left)], nl) -
                       (nr / node.cover) * impurity(counts[static_cast<std::size_t>(node.right)], nr);
            decrease_sum += (node.cover / root_cover) * d;
        }
    }
    CHECK(score_sum ==
          doctest::Approx(decrease_sum / static_cast<double>(forest.trees.size())).epsilon(1e-9));
}

TEST_CASE("rank_features_gini rejects single-class data") {
    Dataset ds = single_column({1, 2, 3});
    ds.validate();
    CHECK_THROWS_AS(rank_features_gini(ds, importance_forest_defaults(), 0), Error);
}

TEST_CASE("select_top_k keeps the k best features in ranking order") {
    Dataset ds = make_synthetic(75, 107, 2);
    GiniRanking ranking = rank_features_gini(ds, importance_forest_defaults(), 0);
    Dataset top50 = select_top_k(ds, ranking, 50);
    CHECK(top50.n_features() == 50);
    CHECK(top50.n_rows() == ds.n_rows());
    CHECK(top50.labels == ds.labels);
    CHECK(top50.feature_names[0] == ds.feature_names[ranking.order[0]]);

    Dataset all = select_top_k(ds, ranking, 500);
    CHECK(all.n_features() == ds.n_features());
    CHECK(all.feature_names[0] == ds.feature_names[ranking.order[0]]);

    Dataset one = select_top_k(ds, ranking, 1);
    CHECK(one.n_features() == 1);

    CHECK_THROWS_AS(select_top_k(ds, ranking, 0), Error);
}

TEST_CASE("select_top_k is a projection") {
    Dataset ds = make_synthetic(40, 9, 3);
    GiniRanking ranking = rank_features_gini(ds, importance_forest_defaults(), 1);
    Dataset once = select_top_k(ds, ranking, 4);

    GiniRanking identity;
    identity.scores.assign(4, 0.0);
    for (std::size_t i = 0; i < 4; ++i) {
        identity.order.push_back(i);
        identity.scores[i] = 4.0 - static_cast<double>(i); // already ordered
    }
    Dataset twice = select_top_k(once, identity, 4);
    CHECK(once == twice);
}

TEST_CASE("zscore normalizer records mean and population std") {
    Dataset ds = single_column({1, 2, 3});
    NormalizerParams params = fit_normalizer(ds, NormalizerKind::ZScore);
    CHECK(params.a[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(params.b[0] == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-12));

    Dataset normalized = apply_normalizer(ds, params);
    CHECK(normalized.at(0, 0) == doctest::Approx(-1.224744871).epsilon(1e-4));
    CHECK(normalized.at(1, 0) == doctest::Approx(0.0));
    CHECK(normalized.at(2, 0) == doctest::Approx(1.224744871).epsilon(1e-4));
}

TEST_CASE("minmax normalizer maps the fit range onto [0,1] without clipping") {
    Dataset ds = single_column({2, 4, 6});
    NormalizerParams params = fit_normalizer(ds, NormalizerKind::MinMax);
    CHECK(params.a[0] == 2.0);
    CHECK(params.b[0] == 6.0);

    Dataset normalized = apply_normalizer(ds, params);
    CHECK(normalized.at(0, 0) == 0.0);
    CHECK(normalized.at(1, 0) == 0.5);
    CHECK(normalized.at(2, 0) == 1.0);

    Dataset test = single_column({8});
    Dataset mapped = apply_normalizer(test, params);
    CHECK(mapped.at(0, 0) == doctest::Approx(1.5).epsilon(1e-12)); // not clipped
}

TEST_CASE("constant columns normalize to zero") {
    Dataset ds = single_column({5, 5, 5});
    NormalizerParams z = fit_normalizer(ds, NormalizerKind::ZScore);
    CHECK(z.a[0] == 5.0);
    CHECK(z.b[0] == 0.0);
    CHECK(apply_normalizer(ds, z).at(1, 0) == 0.0);

    NormalizerParams mm = fit_normalizer(ds, NormalizerKind::MinMax);
    CHECK(apply_normalizer(ds, mm).at(2, 0) == 0.0);
}

TEST_CASE("normalizing the fitting data gives mean 0 / std 1 and min 0 / max 1") {
    Dataset ds = make_synthetic(50, 8, 17);
    Dataset z = apply_normalizer(ds, fit_normalizer(ds, NormalizerKind::ZScore));
    for (std::size_t c = 0; c < z.n_features(); ++c) {
        double mean = 0;
        for (std::size_t r = 0; r < z.n_rows(); ++r) mean += z.at(r, c);
        mean /= static_cast<double>(z.n_rows());
        double var = 0;
        for (std::size_t r = 0; r < z.n_rows(); ++r) {
            var += (z.at(r, c) - mean) * (z.at(r, c) - mean);
        }
        var /= static_cast<double>(z.n_rows());
        CHECK(std::abs(mean) < 1e-9);
        CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-9);
    }

    Dataset mm = apply_normalizer(ds, fit_normalizer(ds, NormalizerKind::MinMax));
    for (std::size_t c = 0; c < mm.n_features(); ++c) {
        double lo = mm.at(0, c), hi = mm.at(0, c);
        for (std::size_t r = 1; r < mm.n_rows(); ++r) {
            lo = std::min(lo, mm.at(r, c));
            hi = std::max(hi, mm.at(r, c));
        }
        CHECK(lo == 0.0);
        CHECK(hi == 1.0);
    }
}

TEST_CASE("apply_normalizer rejects dimension mismatch") {
    Dataset ds = make_synthetic(20, 4, 1);
    NormalizerParams params = fit_normalizer(ds, NormalizerKind::ZScore);
    Dataset other = make_synthetic(20, 6, 1);
    CHECK_THROWS_AS(apply_normalizer(other, params), Error);
}

TEST_CASE("ranking and normalizer serialization round-trips") {
    Dataset ds = make_synthetic(40, 6, 2);
    GiniRanking ranking = rank_features_gini(ds, importance_forest_defaults(), 3);
    GiniRanking again = ranking_from_json(ranking_to_json(ranking, ds.feature_names));
    CHECK(again.scores == ranking.scores);
    CHECK(again.order == ranking.order);

    std::string csv = ranking_to_csv(ranking, ds.feature_names);
    CHECK(csv.rfind("feature,score,rank\n", 0) == 0);

    NormalizerParams params = fit_normalizer(ds, NormalizerKind::MinMax);
    NormalizerParams p2 = normalizer_from_json(normalizer_to_json(params));
    CHECK(p2.kind == params.kind);
    CHECK(p2.a == params.a);
    CHECK(p2.b == params.b);
}
