#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tabfox/data.hpp"
#include "tabfox/foxopt.hpp"
#include "tabfox/preprocess.hpp"
#include "tabfox/report.hpp"

namespace tabfox {

enum class LeakageMode {
    Safe,      // rank + normalize fitted on the training split only
    PaperOrder // rank + normalize on the full dataset, then split
};

struct PipelineConfig {
    std::string input;                 // CSV path; empty = bundled synthetic data
    std::string label_column = "label";
    std::size_t top_k = 50;
    NormalizerKind normalizer = NormalizerKind::ZScore;
    double test_fraction = 0.2;
    bool stratified = true;
    std::uint64_t seed = 0;
    bool run_forest = true;
    bool run_gbt = true;
    bool tuning = true;
    int fox_pop_size = 20;
    int fox_max_iters = 50;
    int folds = 5;
    LeakageMode leakage = LeakageMode::Safe;
    std::size_t explain_max_exact = 15;
    std::size_t explain_permutations = 200;
    std::string output_dir = "out";
    std::size_t synth_rows = 75;
    std::size_t synth_features = 12;

    void validate() const;
};

PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg);

struct PipelineResult {
    std::vector<ComparisonEntry> comparison;
    std::string best_model;
    nlohmann::json manifest;
};

/// Full workflow: load -> rank/select/normalize (per leakage mode) -> split ->
/// fit baselines -> FOX-tune -> evaluate on the held-out split -> explain the
/// best model -> write the artifact bundle. Deterministic for a fixed config,
/// independent of the thread count. Throws Error naming the failing stage.
PipelineResult run_pipeline(const PipelineConfig& cfg);

} // namespace tabfox
