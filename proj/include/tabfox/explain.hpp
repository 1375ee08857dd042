#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tabfox/forest.hpp"
#include "tabfox/gbt.hpp"

namespace tabfox {

/// Per-sample Shapley attribution. For forests the output space is the
/// probability vector; for boosted trees it is the per-class logit (the
/// additive space), so the efficiency identity
///   base_value[k] + sum_j contributions[j][k] == predicted_output[k]
/// holds exactly in both cases.
struct Explanation {
    std::vector<double> base_value;                  // per class, = v(empty set)
    std::vector<std::vector<double>> contributions;  // [n_features][n_classes]
    std::vector<double> predicted_output;            // per class
    bool exact = true;
    std::size_t n_permutations = 0; // sampling mode only
};

struct ExplainOptions {
    std::size_t max_features_exact = 15;
    bool allow_sampling = true;
    std::size_t n_permutations = 200;
    std::uint64_t seed = 0;
};

/// Conditional expectation of the model output when only `known` features of
/// the row are revealed: unknown splits descend both children weighted by
/// cover fractions. Returns the probability vector for both model kinds;
/// known = all features reproduces predict_proba exactly.
std::vector<double> expected_value_subset(const ForestModel& model, std::span<const double> row,
                                          const std::vector<std::size_t>& known);
std::vector<double> expected_value_subset(const GbtModel& model, std::span<const double> row,
                                          const std::vector<std::size_t>& known);

/// Exact Shapley values by subset enumeration when the feature count is at
/// most max_features_exact, else seeded permutation sampling (if allowed).
Explanation shapley_values(const ForestModel& model, std::span<const double> row,
                           const ExplainOptions& opts = {});
Explanation shapley_values(const GbtModel& model, std::span<const double> row,
                           const ExplainOptions& opts = {});

struct SummaryRanking {
    std::vector<double> values;       // per-feature mean |contribution|
    std::vector<std::size_t> order;   // descending, ties by feature index
};

SummaryRanking summary_ranking(const std::vector<Explanation>& explanations);

std::string contributions_to_csv(const std::vector<Explanation>& explanations,
                                 const std::vector<std::size_t>& row_ids,
                                 const std::vector<std::string>& feature_names,
                                 const std::vector<std::string>& class_names);
nlohmann::json explanations_to_json(const std::vector<Explanation>& explanations,
                                    const std::vector<std::size_t>& row_ids,
                                    const std::vector<std::string>& feature_names,
                                    const std::vector<std::string>& class_names);
std::string summary_to_csv(const SummaryRanking& ranking,
                           const std::vector<std::string>& feature_names);
/// Fixed-width text bar chart of the summary ranking.
std::string summary_to_text(const SummaryRanking& ranking,
                            const std::vector<std::string>& feature_names, int bar_width = 40);

} // namespace tabfox
