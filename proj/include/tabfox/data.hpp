#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace tabfox {

/// Dense tabular dataset: row-major feature matrix with integer class labels.
/// All feature values are finite; labels index into class_names.
struct Dataset {
    std::vector<double> values; // n_rows * n_features, row-major
    std::vector<int> labels;
    std::vector<std::string> feature_names;
    std::vector<std::string> class_names;

    std::size_t n_rows() const { return labels.size(); }
    std::size_t n_features() const { return feature_names.size(); }
    std::size_t n_classes() const { return class_names.size(); }

    double at(std::size_t r, std::size_t c) const { return values[r * n_features() + c]; }
    std::span<const double> row(std::size_t r) const {
        return {values.data() + r * n_features(), n_features()};
    }

    /// Throws Error if any structural invariant is violated.
    void validate() const;

    bool operator==(const Dataset&) const = default;
};

struct SplitSpec {
    double test_fraction = 0.2;
    std::uint64_t seed = 0;
    bool stratified = true;
};

/// Loads a CSV with a header row. Label classes are indexed by first
/// appearance; all other cells must parse as finite reals.
Dataset load_csv(const std::string& path, const std::string& label_column);

/// Inverse of load_csv: feature columns in order, then the label column.
void save_csv(const Dataset& ds, const std::string& path,
              const std::string& label_column = "label");

nlohmann::json dataset_to_json(const Dataset& ds);
Dataset dataset_from_json(const nlohmann::json& j);

/// Deterministic train/test partition. Test size is round-half-up of
/// test_fraction * n_rows (per class when stratified); singleton classes stay
/// in train, and every class keeps at least one training row.
std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec);

std::vector<std::size_t> class_distribution(const Dataset& ds);

/// Dataset restricted to the given rows, in the given order.
Dataset take_rows(const Dataset& ds, const std::vector<std::size_t>& rows);

} // namespace tabfox
