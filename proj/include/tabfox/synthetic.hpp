#pragma once

#include <cstdint>

#include "tabfox/data.hpp"

namespace tabfox {

/// Seeded Gaussian-cluster dataset with radiomic-style feature names and a
/// realistically imbalanced 7-class label (two classes are singletons at the
/// default 75 rows). Lets every workflow run without any clinical data.
Dataset make_synthetic(std::size_t n_rows = 75, std::size_t n_features = 12,
                       std::uint64_t seed = 7);

} // namespace tabfox
