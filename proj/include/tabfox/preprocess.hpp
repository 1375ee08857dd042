#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tabfox/data.hpp"
#include "tabfox/forest.hpp"

namespace tabfox {

/// Mean-decrease-in-impurity importances from an auxiliary forest.
/// `order` is the feature permutation sorted by descending score (ties broken
/// by lower feature index).
struct GiniRanking {
    std::vector<double> scores;
    std::vector<std::size_t> order;
};

enum class NormalizerKind { ZScore, MinMax };

struct NormalizerParams {
    NormalizerKind kind = NormalizerKind::ZScore;
    // zscore: a = mean, b = population std; minmax: a = min, b = max
    std::vector<double> a;
    std::vector<double> b;
};

/// Gini impurity 1 - sum(p_k^2) of a class-count vector.
double gini_impurity(const std::vector<std::size_t>& class_counts);

/// Reasonable defaults for the importance forest behind rank_features_gini.
ForestConfig importance_forest_defaults();

/// Scores feature j as the mean over trees of the sample-fraction-weighted
/// impurity decrease of every node that splits on j. Deterministic given seed.
GiniRanking rank_features_gini(const Dataset& train, const ForestConfig& importance_forest_cfg,
                               std::uint64_t seed);

/// Keeps the min(k, n_features) best-ranked features, in ranking order.
Dataset select_top_k(const Dataset& ds, const GiniRanking& ranking, std::size_t k);

NormalizerParams fit_normalizer(const Dataset& train, NormalizerKind kind);

/// zscore: (x - mean) / std; minmax: (x - min) / (max - min). Degenerate
/// (constant) columns map to 0; out-of-range values are not clipped.
Dataset apply_normalizer(const Dataset& ds, const NormalizerParams& params);

std::string ranking_to_csv(const GiniRanking& ranking, const std::vector<std::string>& feature_names);
nlohmann::json ranking_to_json(const GiniRanking& ranking, const std::vector<std::string>& feature_names);
GiniRanking ranking_from_json(const nlohmann::json& j);

nlohmann::json normalizer_to_json(const NormalizerParams& params);
NormalizerParams normalizer_from_json(const nlohmann::json& j);

NormalizerKind normalizer_kind_from_string(const std::string& name);
std::string to_string(NormalizerKind kind);

} // namespace tabfox
