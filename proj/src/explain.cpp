#include "tabfox/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "tabfox/common.hpp"
#include "tabfox/rng.hpp"

namespace tabfox {

namespace {

// Cover-weighted traversal: known features follow the row, unknown features
// descend both children weighted by cover fractions. Adds weight * leaf value
// into acc.
void accumulate_expectation(const Tree& tree, int idx, std::span<const double> row,
                            const std::vector<bool>& known, double weight,
                            std::vector<double>& acc) {
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(idx)];
    if (node.is_leaf()) {
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += weight * node.value[k];
        return;
    }
    if (known[static_cast<std::size_t>(node.feature)]) {
        int next = row[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                 : node.right;
        accumulate_expectation(tree, next, row, known, weight, acc);
    } else {
        double cover_left = tree.nodes[static_cast<std::size_t>(node.left)].cover;
        double cover_right = tree.nodes[static_cast<std::size_t>(node.right)].cover;
        accumulate_expectation(tree, node.left, row, known, weight * cover_left / node.cover, acc);
        accumulate_expectation(tree, node.right, row, known, weight * cover_right / node.cover,
                               acc);
    }
}

// Raw per-class value of the ensemble under a known-feature mask: mean leaf
// distribution for forests, base_score + summed leaf weights (logits) for gbt.
using ValueFn = std::function<std::vector<double>(const std::vector<bool>&)>;

ValueFn forest_value_fn(const ForestModel& model, std::span<const double> row) {
    return [&model, row](const std::vector<bool>& known) {
        std::vector<double> total(model.n_classes, 0.0);
        std::vector<double> acc(model.n_classes);
        for (const Tree& tree : model.trees) {
            std::fill(acc.begin(), acc.end(), 0.0);
            accumulate_expectation(tree, 0, row, known, 1.0, acc);
            for (std::size_t k = 0; k < total.size(); ++k) total[k] += acc[k];
        }
        double inv = 1.0 / static_cast<double>(model.trees.size());
        for (double& v : total) v *= inv;
        return total;
    };
}

ValueFn gbt_value_fn(const GbtModel& model, std::span<const double> row) {
    return [&model, row](const std::vector<bool>& known) {
        std::vector<double> logits(model.base_score);
        std::vector<double> acc(1);
        for (const auto& round_trees : model.trees) {
            for (std::size_t k = 0; k < model.n_classes; ++k) {
                acc[0] = 0.0;
                accumulate_expectation(round_trees[k], 0, row, known, 1.0, acc);
                logits[k] += acc[0];
            }
        }
        return logits;
    };
}

void check_row(std::span<const double> row, std::size_t n_features, const char* where) {
    if (row.size() != n_features) {
        throw Error(std::string(where) + ": row has " + std::to_string(row.size()) +
                    " features, model expects " + std::to_string(n_features));
    }
    for (double v : row) {
        if (!std::isfinite(v)) throw Error(std::string(where) + ": non-finite input value");
    }
}

std::vector<bool> mask_from_indices(const std::vector<std::size_t>& known,
                                    std::size_t n_features) {
    std::vector<bool> mask(n_features, false);
    for (std::size_t f : known) {
        if (f >= n_features) throw Error("expected_value_subset: feature index out of range");
        mask[f] = true;
    }
    return mask;
}

Explanation explain_exact(const ValueFn& value, std::size_t n_features, std::size_t n_classes) {
    const std::size_t n_masks = std::size_t{1} << n_features;

    std::vector<std::vector<double>> values(n_masks);
    std::vector<bool> mask(n_features);
    for (std::size_t m = 0; m < n_masks; ++m) {
        for (std::size_t f = 0; f < n_features; ++f) mask[f] = (m >> f) & 1u;
        values[m] = value(mask);
    }

    // weight(s) = s! (M - s - 1)! / M! for a coalition of size s
    std::vector<double> factorial(n_features + 1, 1.0);
    for (std::size_t i = 1; i <= n_features; ++i) {
        factorial[i] = factorial[i - 1] * static_cast<double>(i);
    }
    std::vector<double> weight(n_features);
    for (std::size_t s = 0; s < n_features; ++s) {
        weight[s] = factorial[s] * factorial[n_features - s - 1] / factorial[n_features];
    }

    Explanation ex;
    ex.exact = true;
    ex.base_value = values[0];
    ex.predicted_output = values[n_masks - 1];
    ex.contributions.assign(n_features, std::vector<double>(n_classes, 0.0));
    for (std::size_t j = 0; j < n_features; ++j) {
        const std::size_t bit = std::size_t{1} << j;
        for (std::size_t m = 0; m < n_masks; ++m) {
            if (m & bit) continue;
            double w = weight[static_cast<std::size_t>(std::popcount(m))];
            const auto& with_j = values[m | bit];
            const auto& without_j = values[m];
            for (std::size_t k = 0; k < n_classes; ++k) {
                ex.contributions[j][k] += w * (with_j[k] - without_j[k]);
            }
        }
    }
    return ex;
}

Explanation explain_sampling(const ValueFn& value, std::size_t n_features, std::size_t n_classes,
                             std::size_t n_permutations, std::uint64_t seed) {
    if (n_features > 64) {
        throw Error("shapley_values: sampling mode supports at most 64 features");
    }
    Explanation ex;
    ex.exact = false;
    ex.n_permutations = n_permutations;
    ex.contributions.assign(n_features, std::vector<double>(n_classes, 0.0));

    std::unordered_map<std::uint64_t, std::vector<double>> cache;
    std::vector<bool> mask(n_features, false);
    auto value_of = [&](std::uint64_t bits) -> const std::vector<double>& {
        auto it = cache.find(bits);
        if (it != cache.end()) return it->second;
        for (std::size_t f = 0; f < n_features; ++f) mask[f] = (bits >> f) & 1u;
        return cache.emplace(bits, value(mask)).first->second;
    };

    ex.base_value = value_of(0);
    std::uint64_t full = n_features == 64 ? ~std::uint64_t{0}
                                          : (std::uint64_t{1} << n_features) - 1;
    ex.predicted_output = value_of(full);

    Rng rng(derive_seed(seed, {0xE0u}));
    for (std::size_t p = 0; p < n_permutations; ++p) {
        auto order = rng.permutation(n_features);
        std::uint64_t bits = 0;
        std::vector<double> prev = value_of(0);
        for (std::size_t f : order) {
            bits |= std::uint64_t{1} << f;
            const auto& cur = value_of(bits);
            for (std::size_t k = 0; k < n_classes; ++k) {
                ex.contributions[f][k] += cur[k] - prev[k];
            }
            prev = cur;
        }
    }
    double inv = 1.0 / static_cast<double>(n_permutations);
    for (auto& per_feature : ex.contributions) {
        for (double& v : per_feature) v *= inv;
    }
    return ex;
}

Explanation explain_core(const ValueFn& value, std::size_t n_features, std::size_t n_classes,
                         const ExplainOptions& opts) {
    if (n_features <= opts.max_features_exact) {
        return explain_exact(value, n_features, n_classes);
    }
    if (!opts.allow_sampling) {
        throw Error("shapley_values: " + std::to_string(n_features) +
                    " features exceed the exact cap of " +
                    std::to_string(opts.max_features_exact) + " and sampling is disabled");
    }
    if (opts.n_permutations == 0) {
        throw Error("shapley_values: sampling mode needs n_permutations >= 1");
    }
    return explain_sampling(value, n_features, n_classes, opts.n_permutations, opts.seed);
}

} // namespace

std::vector<double> expected_value_subset(const ForestModel& model, std::span<const double> row,
                                          const std::vector<std::size_t>& known) {
    check_row(row, model.n_features, "expected_value_subset");
    auto mask = mask_from_indices(known, model.n_features);
    return forest_value_fn(model, row)(mask);
}

std::vector<double> expected_value_subset(const GbtModel& model, std::span<const double> row,
                                          const std::vector<std::size_t>& known) {
    check_row(row, model.n_features, "expected_value_subset");
    auto mask = mask_from_indices(known, model.n_features);
    return softmax(gbt_value_fn(model, row)(mask));
}

Explanation shapley_values(const ForestModel& model, std::span<const double> row,
                           const ExplainOptions& opts) {
    check_row(row, model.n_features, "shapley_values");
    return explain_core(forest_value_fn(model, row), model.n_features, model.n_classes, opts);
}

Explanation shapley_values(const GbtModel& model, std::span<const double> row,
                           const ExplainOptions& opts) {
    check_row(row, model.n_features, "shapley_values");
    return explain_core(gbt_value_fn(model, row), model.n_features, model.n_classes, opts);
}

SummaryRanking summary_ranking(const std::vector<Explanation>& explanations) {
    if (explanations.empty()) throw Error("summary_ranking: no explanations");
    const std::size_t n_features = explanations.front().contributions.size();

    SummaryRanking ranking;
    ranking.values.assign(n_features, 0.0);
    std::size_t cells = 0;
    for (const auto& ex : explanations) {
        if (ex.contributions.size() != n_features) {
            throw Error("summary_ranking: inconsistent feature counts");
        }
        for (std::size_t j = 0; j < n_features; ++j) {
            for (double v : ex.contributions[j]) ranking.values[j] += std::abs(v);
        }
        cells += ex.base_value.size();
    }
    for (double& v : ranking.values) v /= static_cast<double>(cells);

    ranking.order.resize(n_features);
    std::iota(ranking.order.begin(), ranking.order.end(), std::size_t{0});
    std::stable_sort(ranking.order.begin(), ranking.order.end(), [&](std::size_t a, std::size_t b) {
        if (ranking.values[a] != ranking.values[b]) return ranking.values[a] > ranking.values[b];
        return a < b;
    });
    return ranking;
}

std::string contributions_to_csv(const std::vector<Explanation>& explanations,
                                 const std::vector<std::size_t>& row_ids,
                                 const std::vector<std::string>& feature_names,
                                 const std::vector<std::string>& class_names) {
    std::ostringstream out;
    out << "row,feature,class,value\n";
    for (std::size_t i = 0; i < explanations.size(); ++i) {
        const auto& ex = explanations[i];
        std::size_t row_id = i < row_ids.size() ? row_ids[i] : i;
        for (std::size_t j = 0; j < ex.contributions.size(); ++j) {
            for (std::size_t k = 0; k < ex.contributions[j].size(); ++k) {
                out << row_id << ',' << feature_names[j] << ',' << class_names[k] << ','
                    << format_double(ex.contributions[j][k]) << '\n';
            }
        }
    }
    return out.str();
}

nlohmann::json explanations_to_json(const std::vector<Explanation>& explanations,
                                    const std::vector<std::size_t>& row_ids,
                                    const std::vector<std::string>& feature_names,
                                    const std::vector<std::string>& class_names) {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t i = 0; i < explanations.size(); ++i) {
        const auto& ex = explanations[i];
        nlohmann::json contributions = nlohmann::json::object();
        for (std::size_t j = 0; j < ex.contributions.size(); ++j) {
            contributions[feature_names[j]] = ex.contributions[j];
        }
        arr.push_back({{"row", i < row_ids.size() ? row_ids[i] : i},
                       {"base_value", ex.base_value},
                       {"predicted_output", ex.predicted_output},
                       {"exact", ex.exact},
                       {"n_permutations", ex.n_permutations},
                       {"classes", class_names},
                       {"contributions", std::move(contributions)}});
    }
    return nlohmann::json{{"format", "tabfox.explanations"}, {"version", 1}, {"samples", arr}};
}

std::string summary_to_csv(const SummaryRanking& ranking,
                           const std::vector<std::string>& feature_names) {
    std::ostringstream out;
    out << "feature,mean_abs_contribution,rank\n";
    for (std::size_t i = 0; i < ranking.order.size(); ++i) {
        std::size_t f = ranking.order[i];
        out << feature_names[f] << ',' << format_double(ranking.values[f]) << ',' << (i + 1)
            << '\n';
    }
    return out.str();
}

std::string summary_to_text(const SummaryRanking& ranking,
                            const std::vector<std::string>& feature_names, int bar_width) {
    std::size_t name_width = 8;
    for (const auto& name : feature_names) name_width = std::max(name_width, name.size());
    double top = 0.0;
    for (double v : ranking.values) top = std::max(top, v);

    std::ostringstream out;
    out << "mean |contribution| per feature\n";
    for (std::size_t i = 0; i < ranking.order.size(); ++i) {
        std::size_t f = ranking.order[i];
        double v = ranking.values[f];
        int bar = top > 0.0 ? static_cast<int>(std::round(v / top * bar_width)) : 0;
        out << feature_names[f] << std::string(name_width - feature_names[f].size() + 2, ' ')
            << std::string(static_cast<std::size_t>(bar), '#')
            << std::string(static_cast<std::size_t>(bar_width - bar) + 2, ' ') << format_double(v)
            << '\n';
    }
    return out.str();
}

} // namespace tabfox
