#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "tabfox/data.hpp"
#include "tabfox/forest.hpp"
#include "tabfox/foxopt.hpp"
#include "tabfox/gbt.hpp"

namespace tabfox {

enum class ParamKind { Integer, Real, LogReal };

struct ParamSpec {
    std::string name;
    ParamKind kind = ParamKind::Real;
    double lo = 0.0;
    double hi = 1.0;

    void validate() const;
};

enum class ModelKind { Forest, Gbt };

struct SearchSpace {
    ModelKind model_kind = ModelKind::Forest;
    std::vector<ParamSpec> params;

    std::size_t dim() const { return params.size(); }
    void validate() const;
};

SearchSpace default_forest_space();
SearchSpace default_gbt_space();

/// Maps a unit-box vector to concrete parameter values: linear for real,
/// exponential for log_real, rounded-and-clamped for integer.
std::map<std::string, double> decode(const std::vector<double>& x, const SearchSpace& space);

/// Inverse of decode (integers land on their grid point).
std::vector<double> encode(const std::map<std::string, double>& params, const SearchSpace& space);

ForestConfig forest_config_from_params(const std::map<std::string, double>& params);
GbtConfig gbt_config_from_params(const std::map<std::string, double>& params);

/// Baseline parameter values used to seed the search. The forest's automatic
/// sqrt feature fraction and unlimited depth are resolved to concrete values
/// inside the space's ranges.
std::map<std::string, double> baseline_params(const SearchSpace& space, std::size_t n_features);

enum class TuneMetric { Accuracy, WeightedF1 };

/// Stratified k-fold objective: x -> 1 - mean fold score of the decoded
/// model. Fold assignment is fixed by `seed`; classes with a single member
/// are pinned to every training fold.
Objective cv_objective(const Dataset& train, const SearchSpace& space, int folds,
                       std::uint64_t seed, TuneMetric metric = TuneMetric::Accuracy);

struct TuneResult {
    ModelKind model_kind = ModelKind::Forest;
    std::map<std::string, double> best_params;
    std::variant<ForestConfig, GbtConfig> best_config;
    double best_cv_score = 0.0;
    double baseline_cv_score = 0.0;
    std::vector<double> trace; // per-iteration best objective (1 - score)
};

/// FOX search over the unit box. One initial agent carries the encoded
/// baseline config, so best_cv_score >= baseline_cv_score by construction.
TuneResult tune(const Dataset& train, const SearchSpace& space, const FoxConfig& fox_cfg,
                int folds, std::uint64_t seed, TuneMetric metric = TuneMetric::Accuracy);

nlohmann::json tune_result_to_json(const TuneResult& result);

SearchSpace search_space_from_json(const nlohmann::json& j);
nlohmann::json search_space_to_json(const SearchSpace& space);

ModelKind model_kind_from_string(const std::string& name);
std::string to_string(ModelKind kind);

} // namespace tabfox
