#include "tabfox/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "tabfox/common.hpp"
#include "tabfox/parallel.hpp"
#include "tabfox/rng.hpp"

namespace tabfox {

namespace {

constexpr double kMinGain = 1e-12;

double gini_from_counts(const std::vector<std::size_t>& counts, std::size_t total) {
    double sum_sq = 0.0;
    for (std::size_t c : counts) {
        double p = static_cast<double>(c) / static_cast<double>(total);
        sum_sq += p * p;
    }
    return 1.0 - sum_sq;
}

struct SplitChoice {
    bool found = false;
    double decrease = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

// Grows one CART tree. Split search scans a random feature subset of size
// `subset_size`; if no usable split shows up there, it keeps scanning the
// remaining features in permutation order so a separable node never turns
// into an impure leaf just because the draw was unlucky.
class TreeGrower {
public:
    TreeGrower(const Dataset& ds, const ForestConfig& cfg, std::size_t subset_size, Rng rng)
        : ds_(ds), cfg_(cfg), subset_size_(subset_size), rng_(rng) {}

    Tree grow(std::vector<std::size_t> rows) {
        Tree tree;
        grow_node(tree, std::move(rows), 0);
        return tree;
    }

private:
    int grow_node(Tree& tree, std::vector<std::size_t> rows, int depth) {
        const std::size_t n = rows.size();
        std::vector<std::size_t> counts(ds_.n_classes(), 0);
        for (std::size_t r : rows) counts[static_cast<std::size_t>(ds_.labels[r])]++;

        std::size_t nonzero = 0;
        for (std::size_t c : counts) nonzero += (c > 0);

        const bool depth_capped = cfg_.max_depth && depth >= *cfg_.max_depth;
        const bool too_small = n < 2 * static_cast<std::size_t>(cfg_.min_samples_leaf);
        SplitChoice best;
        if (nonzero > 1 && !depth_capped && !too_small) best = find_split(rows, counts);

        int idx = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.back().cover = static_cast<double>(n);

        if (!best.found) {
            auto& leaf = tree.nodes.back();
            leaf.value.resize(ds_.n_classes());
            for (std::size_t c = 0; c < counts.size(); ++c) {
                leaf.value[c] = static_cast<double>(counts[c]) / static_cast<double>(n);
            }
            return idx;
        }

        std::vector<std::size_t> left_rows, right_rows;
        left_rows.reserve(n);
        right_rows.reserve(n);
        for (std::size_t r : rows) {
            if (ds_.at(r, static_cast<std::size_t>(best.feature)) <= best.threshold) {
                left_rows.push_back(r);
            } else {
                right_rows.push_back(r);
            }
        }
        rows.clear();
        rows.shrink_to_fit();

        tree.nodes[static_cast<std::size_t>(idx)].feature = best.feature;
        tree.nodes[static_cast<std::size_t>(idx)].threshold = best.threshold;
        int left = grow_node(tree, std::move(left_rows), depth + 1);
        int right = grow_node(tree, std::move(right_rows), depth + 1);
        tree.nodes[static_cast<std::size_t>(idx)].left = left;
        tree.nodes[static_cast<std::size_t>(idx)].right = right;
        return idx;
    }

    SplitChoice find_split(const std::vector<std::size_t>& rows,
                           const std::vector<std::size_t>& parent_counts) {
        const std::size_t n = rows.size();
        const double parent_impurity = gini_from_counts(parent_counts, n);
        const std::size_t msl = static_cast<std::size_t>(cfg_.min_samples_leaf);

        auto order = rng_.permutation(ds_.n_features());
        SplitChoice best;
        std::size_t informative_seen = 0;

        scan_.resize(n);
        std::vector<std::size_t> left_counts(ds_.n_classes());

        for (std::size_t f : order) {
            if (informative_seen >= subset_size_ && best.found) break;

            for (std::size_t i = 0; i < n; ++i) scan_[i] = {ds_.at(rows[i], f), rows[i]};
            std::sort(scan_.begin(), scan_.end());
            if (scan_.front().first == scan_.back().first) continue; // constant here
            ++informative_seen;

            std::fill(left_counts.begin(), left_counts.end(), 0);
            for (std::size_t i = 1; i < n; ++i) {
                left_counts[static_cast<std::size_t>(ds_.labels[scan_[i - 1].second])]++;
                double prev = scan_[i - 1].first;
                double cur = scan_[i].first;
                if (cur <= prev) continue; // only between distinct values
                if (i < msl || n - i < msl) continue;

                double wl = static_cast<double>(i) / static_cast<double>(n);
                double left_impurity = gini_from_counts(left_counts, i);
                double right_impurity = 0.0;
                {
                    double sum_sq = 0.0;
                    for (std::size_t c = 0; c < left_counts.size(); ++c) {
                        double pc = static_cast<double>(parent_counts[c] - left_counts[c]) /
                                    static_cast<double>(n - i);
                        sum_sq += pc * pc;
                    }
                    right_impurity = 1.0 - sum_sq;
                }
                double decrease =
                    parent_impurity - wl * left_impurity - (1.0 - wl) * right_impurity;
                double threshold = prev + 0.5 * (cur - prev);

                bool better = decrease > best.decrease;
                bool tie = best.found && decrease == best.decrease;
                if (tie) {
                    better = static_cast<int>(f) < best.feature ||
                             (static_cast<int>(f) == best.feature && threshold < best.threshold);
                }
                if ((!best.found && decrease > kMinGain) || (better && decrease > kMinGain)) {
                    best.found = true;
                    best.decrease = decrease;
                    best.feature = static_cast<int>(f);
                    best.threshold = threshold;
                }
            }
        }
        return best;
    }

    const Dataset& ds_;
    const ForestConfig& cfg_;
    std::size_t subset_size_;
    Rng rng_;
    std::vector<std::pair<double, std::size_t>> scan_;
};

} // namespace

void ForestConfig::validate() const {
    if (n_trees < 1) throw Error("forest: n_trees must be positive");
    if (max_depth && *max_depth < 1) throw Error("forest: max_depth must be positive");
    if (min_samples_leaf < 1) throw Error("forest: min_samples_leaf must be positive");
    if (max_features_fraction &&
        !(*max_features_fraction > 0.0 && *max_features_fraction <= 1.0)) {
        throw Error("forest: max_features_fraction must be in (0, 1]");
    }
}

ForestModel fit_forest(const Dataset& train, const ForestConfig& cfg) {
    cfg.validate();
    if (train.n_rows() == 0) throw Error("fit_forest: empty dataset");

    const std::size_t m = train.n_features();
    std::size_t subset = m;
    if (m > 0) {
        double frac_features = cfg.max_features_fraction
                                   ? std::ceil(*cfg.max_features_fraction * static_cast<double>(m))
                                   : std::ceil(std::sqrt(static_cast<double>(m)));
        subset = std::clamp<std::size_t>(static_cast<std::size_t>(frac_features), 1, m);
    }

    ForestModel model;
    model.config = cfg;
    model.n_classes = train.n_classes();
    model.n_features = m;
    model.trees.resize(static_cast<std::size_t>(cfg.n_trees));

    const std::size_t n = train.n_rows();
    parallel_for(model.trees.size(), [&](std::size_t t) {
        Rng rng(derive_seed(cfg.seed, {0xF0u, t}));
        std::vector<std::size_t> rows(n);
        if (cfg.bootstrap) {
            for (std::size_t i = 0; i < n; ++i) rows[i] = rng.uniform_int(n);
        } else {
            std::iota(rows.begin(), rows.end(), std::size_t{0});
        }
        TreeGrower grower(train, cfg, subset, rng);
        model.trees[t] = grower.grow(std::move(rows));
    });
    return model;
}

int argmax_class(std::span<const double> scores) {
    int best = 0;
    for (std::size_t k = 1; k < scores.size(); ++k) {
        if (scores[k] > scores[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
    }
    return best;
}

std::vector<double> predict_proba(const ForestModel& model, std::span<const double> row) {
    if (row.size() != model.n_features) {
        throw Error("predict_proba: row has " + std::to_string(row.size()) +
                    " features, model expects " + std::to_string(model.n_features));
    }
    for (double v : row) {
        if (!std::isfinite(v)) throw Error("predict_proba: non-finite input value");
    }
    std::vector<double> proba(model.n_classes, 0.0);
    for (const Tree& tree : model.trees) {
        const auto& dist = tree.evaluate(row);
        for (std::size_t k = 0; k < proba.size(); ++k) proba[k] += dist[k];
    }
    const double inv = 1.0 / static_cast<double>(model.trees.size());
    for (double& p : proba) p *= inv;
    return proba;
}

std::vector<int> predict(const ForestModel& model, const Dataset& ds) {
    std::vector<int> out(ds.n_rows());
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
        out[r] = argmax_class(predict_proba(model, ds.row(r)));
    }
    return out;
}

namespace {

nlohmann::json node_to_json(const Tree& tree, int idx) {
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(idx)];
    nlohmann::json j;
    j["cover"] = node.cover;
    if (node.is_leaf()) {
        j["value"] = node.value;
    } else {
        j["feature"] = node.feature;
        j["threshold"] = node.threshold;
        j["left"] = node_to_json(tree, node.left);
        j["right"] = node_to_json(tree, node.right);
    }
    return j;
}

int node_from_json(const nlohmann::json& j, Tree& tree, std::size_t value_width) {
    int idx = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.back().cover = j.at("cover").get<double>();
    if (j.contains("feature")) {
        tree.nodes[static_cast<std::size_t>(idx)].feature = j.at("feature").get<int>();
        tree.nodes[static_cast<std::size_t>(idx)].threshold = j.at("threshold").get<double>();
        int left = node_from_json(j.at("left"), tree, value_width);
        int right = node_from_json(j.at("right"), tree, value_width);
        tree.nodes[static_cast<std::size_t>(idx)].left = left;
        tree.nodes[static_cast<std::size_t>(idx)].right = right;
    } else {
        auto value = j.at("value").get<std::vector<double>>();
        if (value.size() != value_width) throw Error("tree_from_json: unexpected leaf width");
        tree.nodes[static_cast<std::size_t>(idx)].value = std::move(value);
    }
    return idx;
}

} // namespace

nlohmann::json tree_to_json(const Tree& tree) { return node_to_json(tree, 0); }

Tree tree_from_json(const nlohmann::json& j, std::size_t value_width) {
    Tree tree;
    node_from_json(j, tree, value_width);
    return tree;
}

nlohmann::json forest_to_json(const ForestModel& model) {
    nlohmann::json cfg{{"n_trees", model.config.n_trees},
                       {"min_samples_leaf", model.config.min_samples_leaf},
                       {"bootstrap", model.config.bootstrap},
                       {"seed", model.config.seed}};
    cfg["max_depth"] = model.config.max_depth ? nlohmann::json(*model.config.max_depth)
                                              : nlohmann::json(nullptr);
    cfg["max_features_fraction"] = model.config.max_features_fraction
                                       ? nlohmann::json(*model.config.max_features_fraction)
                                       : nlohmann::json(nullptr);
    nlohmann::json trees = nlohmann::json::array();
    for (const Tree& tree : model.trees) trees.push_back(tree_to_json(tree));
    return nlohmann::json{{"format", "tabfox.forest"},
                          {"version", 1},
                          {"n_classes", model.n_classes},
                          {"n_features", model.n_features},
                          {"config", std::move(cfg)},
                          {"trees", std::move(trees)}};
}

ForestModel forest_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "tabfox.forest" || j.value("version", 0) != 1) {
        throw Error("forest_from_json: not a tabfox.forest v1 document");
    }
    ForestModel model;
    model.n_classes = j.at("n_classes").get<std::size_t>();
    model.n_features = j.at("n_features").get<std::size_t>();
    const auto& cfg = j.at("config");
    model.config.n_trees = cfg.at("n_trees").get<int>();
    model.config.min_samples_leaf = cfg.at("min_samples_leaf").get<int>();
    model.config.bootstrap = cfg.at("bootstrap").get<bool>();
    model.config.seed = cfg.at("seed").get<std::uint64_t>();
    if (!cfg.at("max_depth").is_null()) model.config.max_depth = cfg.at("max_depth").get<int>();
    if (!cfg.at("max_features_fraction").is_null()) {
        model.config.max_features_fraction = cfg.at("max_features_fraction").get<double>();
    }
    for (const auto& tj : j.at("trees")) {
        model.trees.push_back(tree_from_json(tj, model.n_classes));
    }
    return model;
}

void save_forest(const ForestModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out.is_open()) throw Error("save_forest: cannot open '" + path + "'");
    out << forest_to_json(model).dump(2) << '\n';
}

ForestModel load_forest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.is_open()) throw Error("load_forest: cannot open '" + path + "'");
    nlohmann::json j;
    in >> j;
    return forest_from_json(j);
}

} // namespace tabfox
