#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace tabfox {

/// rows = true class, cols = predicted class.
struct ConfusionMatrix {
    std::size_t n_classes = 0;
    std::vector<std::int64_t> counts; // row-major n_classes x n_classes

    std::int64_t at(std::size_t t, std::size_t p) const { return counts[t * n_classes + p]; }
    std::int64_t total() const;
};

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::int64_t support = 0;
    bool degenerate = false; // precision or recall hit the zero-division rule
};

struct MetricsReport {
    std::vector<ClassMetrics> per_class;
    double weighted_precision = 0.0;
    double weighted_recall = 0.0;
    double weighted_f1 = 0.0;
    double accuracy = 0.0;
    ConfusionMatrix confusion;
};

ConfusionMatrix confusion_matrix(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                 std::size_t n_classes);

/// Per-class precision/recall/F1 with support weighting. Zero-division cases
/// report 0 and set the degenerate flag. Support-weighted recall equals
/// accuracy by construction.
MetricsReport metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                      std::size_t n_classes);

nlohmann::json metrics_to_json(const MetricsReport& report,
                               const std::vector<std::string>& class_names = {});
MetricsReport metrics_from_json(const nlohmann::json& j);
std::string confusion_to_csv(const ConfusionMatrix& cm,
                             const std::vector<std::string>& class_names = {});
std::string metrics_to_text(const MetricsReport& report,
                            const std::vector<std::string>& class_names = {});

struct ComparisonEntry {
    std::string name;
    MetricsReport report;
};

std::string comparison_table_csv(const std::vector<ComparisonEntry>& entries);
nlohmann::json comparison_table_json(const std::vector<ComparisonEntry>& entries);
/// Two-decimal text rendering, one row per model.
std::string comparison_table_text(const std::vector<ComparisonEntry>& entries);

} // namespace tabfox
