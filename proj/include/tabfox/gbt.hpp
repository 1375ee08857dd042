#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tabfox/data.hpp"
#include "tabfox/tree.hpp"

namespace tabfox {

struct GbtConfig {
    int n_rounds = 100;
    double learning_rate = 0.3;
    int max_depth = 6;
    double min_child_weight = 1.0;
    double reg_lambda = 1.0;
    double gamma = 0.0;
    double subsample = 1.0;
    double colsample = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Second-order boosted trees with a softmax multi-class objective.
/// trees[round][class] is a regression tree whose leaves hold learning-rate
/// scaled Newton steps; class logits are base_score plus the tree outputs.
struct GbtModel {
    std::vector<std::vector<Tree>> trees; // n_rounds x n_classes
    std::vector<double> base_score;       // per-class log prior
    double learning_rate = 0.3;
    GbtConfig config;
    std::size_t n_classes = 0;
    std::size_t n_features = 0;
};

/// First and second derivatives of softmax cross-entropy at the given logits:
/// g_k = p_k - [k == true_class], h_k = p_k (1 - p_k).
std::pair<std::vector<double>, std::vector<double>> softmax_gradients(
    std::span<const double> logits, int true_class);

/// Regularized gain of splitting a node with children stats (G_L, H_L) and
/// (G_R, H_R); gamma is subtracted as a split penalty.
double split_gain(double g_left, double h_left, double g_right, double h_right,
                  double reg_lambda, double gamma);

std::vector<double> softmax(std::span<const double> logits);

/// Fits the model; when loss_trace is non-null it receives the training
/// multiclass log-loss after every round.
GbtModel fit_gbt(const Dataset& train, const GbtConfig& cfg,
                 std::vector<double>* loss_trace = nullptr);

std::vector<double> predict_logits(const GbtModel& model, std::span<const double> row);
std::vector<double> predict_proba(const GbtModel& model, std::span<const double> row);
std::vector<int> predict(const GbtModel& model, const Dataset& ds);

nlohmann::json gbt_to_json(const GbtModel& model);
GbtModel gbt_from_json(const nlohmann::json& j);
void save_gbt(const GbtModel& model, const std::string& path);
GbtModel load_gbt(const std::string& path);

} // namespace tabfox
