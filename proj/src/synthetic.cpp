#include "tabfox/synthetic.hpp"

#include <algorithm>
#include <array>
#include <string>

#include "tabfox/common.hpp"
#include "tabfox/rng.hpp"

namespace tabfox {

namespace {

constexpr std::array<const char*, 7> kClassNames = {
    "nsclc", "sclc", "breast", "melanoma", "ovarian", "kidney", "uterine"};

// Cohort proportions; at 75 rows the counts come out as 38/5/22/6/2/1/1.
constexpr std::array<double, 7> kClassWeights = {38, 5, 22, 6, 2, 1, 1};

constexpr std::array<const char*, 16> kFeatureStems = {
    "firstorder_mean",       "firstorder_entropy",  "firstorder_skewness",
    "glcm_contrast",         "glcm_correlation",    "glcm_cluster_shade",
    "glrlm_run_entropy",     "glszm_zone_entropy",  "ngtdm_busyness",
    "gldm_dependence_entropy", "shape_sphericity",  "shape_elongation",
    "shape_surface_volume_ratio", "firstorder_kurtosis", "glcm_idm",
    "glrlm_long_run_emphasis"};

// Largest-remainder apportionment of n rows over the class weights.
std::array<std::size_t, 7> class_counts(std::size_t n) {
    double total = 0;
    for (double w : kClassWeights) total += w;
    std::array<std::size_t, 7> counts{};
    std::array<std::pair<double, std::size_t>, 7> remainders{};
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < 7; ++c) {
        double exact = static_cast<double>(n) * kClassWeights[c] / total;
        counts[c] = static_cast<std::size_t>(exact);
        remainders[c] = {exact - static_cast<double>(counts[c]), c};
        assigned += counts[c];
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::size_t i = 0; assigned < n; ++i, ++assigned) counts[remainders[i % 7].second]++;
    return counts;
}

} // namespace

Dataset make_synthetic(std::size_t n_rows, std::size_t n_features, std::uint64_t seed) {
    if (n_rows < 7) throw Error("make_synthetic: need at least 7 rows (one per class)");
    if (n_features == 0) throw Error("make_synthetic: need at least one feature");

    Dataset ds;
    for (std::size_t f = 0; f < n_features; ++f) {
        std::string name = kFeatureStems[f % kFeatureStems.size()];
        if (f >= kFeatureStems.size()) {
            name += "_" + std::to_string(f / kFeatureStems.size());
        }
        ds.feature_names.push_back(std::move(name));
    }
    ds.class_names.assign(kClassNames.begin(), kClassNames.end());

    auto counts = class_counts(n_rows);

    // Class centers: informative on every feature, spread wide enough that
    // tree models separate most classes but not trivially all of them.
    Rng center_rng(derive_seed(seed, {0x51u}));
    std::vector<std::vector<double>> centers(7, std::vector<double>(n_features));
    for (auto& center : centers) {
        for (double& m : center) m = center_rng.normal() * 1.2;
    }

    Rng row_rng(derive_seed(seed, {0x52u}));
    for (std::size_t c = 0; c < 7; ++c) {
        for (std::size_t i = 0; i < counts[c]; ++i) {
            for (std::size_t f = 0; f < n_features; ++f) {
                ds.values.push_back(centers[c][f] + row_rng.normal());
            }
            ds.labels.push_back(static_cast<int>(c));
        }
    }
    ds.validate();
    return ds;
}

} // namespace tabfox
