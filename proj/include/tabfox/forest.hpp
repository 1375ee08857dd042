#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "tabfox/data.hpp"
#include "tabfox/tree.hpp"

namespace tabfox {

struct ForestConfig {
    int n_trees = 100;
    std::optional<int> max_depth = std::nullopt;          // nullopt = unlimited
    int min_samples_leaf = 1;
    std::optional<double> max_features_fraction = std::nullopt; // nullopt = sqrt(M)/M
    bool bootstrap = true;
    std::uint64_t seed = 0;

    void validate() const;
};

struct ForestModel {
    std::vector<Tree> trees;
    ForestConfig config;
    std::size_t n_classes = 0;
    std::size_t n_features = 0;
};

/// Bagged CART forest with probability leaves, greedy Gini splits, and
/// per-node feature subsampling. Deterministic given config.seed, independent
/// of the thread count.
ForestModel fit_forest(const Dataset& train, const ForestConfig& cfg);

/// Soft vote: mean of per-tree leaf distributions.
std::vector<double> predict_proba(const ForestModel& model, std::span<const double> row);
std::vector<int> predict(const ForestModel& model, const Dataset& ds);

nlohmann::json forest_to_json(const ForestModel& model);
ForestModel forest_from_json(const nlohmann::json& j);
void save_forest(const ForestModel& model, const std::string& path);
ForestModel load_forest(const std::string& path);

/// argmax with lowest-index tie-breaking; shared by both model kinds.
int argmax_class(std::span<const double> scores);

} // namespace tabfox
