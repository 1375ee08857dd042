#include "tabfox/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tabfox/common.hpp"
#include "tabfox/rng.hpp"

namespace tabfox {

namespace {

double gini_of_value(const std::vector<double>& counts, double total) {
    double sum_sq = 0.0;
    for (double c : counts) {
        double p = c / total;
        sum_sq += p * p;
    }
    return 1.0 - sum_sq;
}

// Class counts are not stored on internal nodes, so rebuild them bottom-up
// from leaf distributions (value * cover is the exact per-class count).
std::vector<double> accumulate_importance(const Tree& tree, int idx, double root_cover,
                                          std::vector<double>& scores) {
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(idx)];
    if (node.is_leaf()) {
        std::vector<double> counts(node.value.size());
        for (std::size_t k = 0; k < counts.size(); ++k) counts[k] = node.value[k] * node.cover;
        return counts;
    }
    auto left_counts = accumulate_importance(tree, node.left, root_cover, scores);
    auto right_counts = accumulate_importance(tree, node.right, root_cover, scores);

    std::vector<double> counts(left_counts.size());
    for (std::size_t k = 0; k < counts.size(); ++k) counts[k] = left_counts[k] + right_counts[k];

    double n_left = tree.nodes[static_cast<std::size_t>(node.left)].cover;
    double n_right = tree.nodes[static_cast<std::size_t>(node.right)].cover;
    double decrease = gini_of_value(counts, node.cover) -
                      (n_left / node.cover) * gini_of_value(left_counts, n_left) -
                      (n_right / node.cover) * gini_of_value(right_counts, n_right);
    scores[static_cast<std::size_t>(node.feature)] += (node.cover / root_cover) * decrease;
    return counts;
}

} // namespace

double gini_impurity(const std::vector<std::size_t>& class_counts) {
    std::size_t total = 0;
    for (std::size_t c : class_counts) total += c;
    if (total == 0) throw Error("gini_impurity: all class counts are zero");
    double sum_sq = 0.0;
    for (std::size_t c : class_counts) {
        double p = static_cast<double>(c) / static_cast<double>(total);
        sum_sq += p * p;
    }
    return 1.0 - sum_sq;
}

ForestConfig importance_forest_defaults() {
    ForestConfig cfg;
    cfg.n_trees = 200;
    cfg.max_depth = std::nullopt;
    cfg.min_samples_leaf = 1;
    cfg.max_features_fraction = std::nullopt; // sqrt(M)/M
    cfg.bootstrap = true;
    return cfg;
}

GiniRanking rank_features_gini(const Dataset& train, const ForestConfig& importance_forest_cfg,
                               std::uint64_t seed) {
    if (train.n_rows() == 0) throw Error("rank_features_gini: empty dataset");
    {
        auto counts = class_distribution(train);
        std::size_t present = 0;
        for (std::size_t c : counts) present += (c > 0);
        if (present < 2) {
            throw Error("rank_features_gini: single-class dataset has no splits to score");
        }
    }

    ForestConfig cfg = importance_forest_cfg;
    cfg.seed = seed;
    ForestModel forest = fit_forest(train, cfg);

    GiniRanking ranking;
    ranking.scores.assign(train.n_features(), 0.0);
    for (const Tree& tree : forest.trees) {
        double root_cover = tree.nodes.front().cover;
        accumulate_importance(tree, 0, root_cover, ranking.scores);
    }
    double inv_trees = 1.0 / static_cast<double>(forest.trees.size());
    for (double& s : ranking.scores) s *= inv_trees;

    ranking.order.resize(train.n_features());
    std::iota(ranking.order.begin(), ranking.order.end(), std::size_t{0});
    std::stable_sort(ranking.order.begin(), ranking.order.end(),
                     [&](std::size_t a, std::size_t b) {
                         if (ranking.scores[a] != ranking.scores[b]) {
                             return ranking.scores[a] > ranking.scores[b];
                         }
                         return a < b;
                     });
    return ranking;
}

Dataset select_top_k(const Dataset& ds, const GiniRanking& ranking, std::size_t k) {
    if (k == 0) throw Error("select_top_k: k must be positive");
    if (ranking.scores.size() != ds.n_features() || ranking.order.size() != ds.n_features()) {
        throw Error("select_top_k: ranking does not match dataset feature count");
    }
    const std::size_t keep = std::min(k, ds.n_features());

    Dataset out;
    out.class_names = ds.class_names;
    out.labels = ds.labels;
    for (std::size_t i = 0; i < keep; ++i) {
        out.feature_names.push_back(ds.feature_names[ranking.order[i]]);
    }
    out.values.reserve(ds.n_rows() * keep);
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
        for (std::size_t i = 0; i < keep; ++i) {
            out.values.push_back(ds.at(r, ranking.order[i]));
        }
    }
    return out;
}

NormalizerParams fit_normalizer(const Dataset& train, NormalizerKind kind) {
    if (train.n_rows() == 0) throw Error("fit_normalizer: empty dataset");
    const std::size_t m = train.n_features();
    const double n = static_cast<double>(train.n_rows());

    NormalizerParams params;
    params.kind = kind;
    params.a.resize(m);
    params.b.resize(m);

    for (std::size_t c = 0; c < m; ++c) {
        if (kind == NormalizerKind::ZScore) {
            double mean = 0.0;
            for (std::size_t r = 0; r < train.n_rows(); ++r) mean += train.at(r, c);
            mean /= n;
            double var = 0.0;
            for (std::size_t r = 0; r < train.n_rows(); ++r) {
                double d = train.at(r, c) - mean;
                var += d * d;
            }
            params.a[c] = mean;
            params.b[c] = std::sqrt(var / n); // population std
        } else {
            double lo = train.at(0, c), hi = train.at(0, c);
            for (std::size_t r = 1; r < train.n_rows(); ++r) {
                lo = std::min(lo, train.at(r, c));
                hi = std::max(hi, train.at(r, c));
            }
            params.a[c] = lo;
            params.b[c] = hi;
        }
    }
    return params;
}

Dataset apply_normalizer(const Dataset& ds, const NormalizerParams& params) {
    if (params.a.size() != ds.n_features()) {
        throw Error("apply_normalizer: params fitted for " + std::to_string(params.a.size()) +
                    " features, dataset has " + std::to_string(ds.n_features()));
    }
    Dataset out = ds;
    const std::size_t m = ds.n_features();
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
        for (std::size_t c = 0; c < m; ++c) {
            double x = ds.at(r, c);
            double y = 0.0;
            if (params.kind == NormalizerKind::ZScore) {
                y = params.b[c] > 0.0 ? (x - params.a[c]) / params.b[c] : 0.0;
            } else {
                double range = params.b[c] - params.a[c];
                y = range > 0.0 ? (x - params.a[c]) / range : 0.0;
            }
            out.values[r * m + c] = y;
        }
    }
    return out;
}

std::string ranking_to_csv(const GiniRanking& ranking,
                           const std::vector<std::string>& feature_names) {
    std::ostringstream out;
    out << "feature,score,rank\n";
    for (std::size_t i = 0; i < ranking.order.size(); ++i) {
        std::size_t f = ranking.order[i];
        out << feature_names[f] << ',' << format_double(ranking.scores[f]) << ',' << (i + 1)
            << '\n';
    }
    return out.str();
}

nlohmann::json ranking_to_json(const GiniRanking& ranking,
                               const std::vector<std::string>& feature_names) {
    nlohmann::json features = nlohmann::json::array();
    for (std::size_t i = 0; i < ranking.order.size(); ++i) {
        std::size_t f = ranking.order[i];
        features.push_back({{"feature", feature_names[f]},
                            {"index", f},
                            {"score", ranking.scores[f]},
                            {"rank", i + 1}});
    }
    return nlohmann::json{{"format", "tabfox.ranking"}, {"version", 1}, {"features", features}};
}

GiniRanking ranking_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "tabfox.ranking" || j.value("version", 0) != 1) {
        throw Error("ranking_from_json: not a tabfox.ranking v1 document");
    }
    const auto& features = j.at("features");
    GiniRanking ranking;
    ranking.scores.resize(features.size());
    ranking.order.resize(features.size());
    for (const auto& item : features) {
        std::size_t f = item.at("index").get<std::size_t>();
        std::size_t rank = item.at("rank").get<std::size_t>();
        ranking.scores.at(f) = item.at("score").get<double>();
        ranking.order.at(rank - 1) = f;
    }
    return ranking;
}

nlohmann::json normalizer_to_json(const NormalizerParams& params) {
    return nlohmann::json{{"format", "tabfox.normalizer"},
                          {"version", 1},
                          {"kind", to_string(params.kind)},
                          {"a", params.a},
                          {"b", params.b}};
}

NormalizerParams normalizer_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "tabfox.normalizer" || j.value("version", 0) != 1) {
        throw Error("normalizer_from_json: not a tabfox.normalizer v1 document");
    }
    NormalizerParams params;
    params.kind = normalizer_kind_from_string(j.at("kind").get<std::string>());
    params.a = j.at("a").get<std::vector<double>>();
    params.b = j.at("b").get<std::vector<double>>();
    return params;
}

NormalizerKind normalizer_kind_from_string(const std::string& name) {
    if (name == "zscore") return NormalizerKind::ZScore;
    if (name == "minmax") return NormalizerKind::MinMax;
    throw Error("unknown normalizer kind '" + name + "' (expected zscore or minmax)");
}

std::string to_string(NormalizerKind kind) {
    return kind == NormalizerKind::ZScore ? "zscore" : "minmax";
}

} // namespace tabfox
