#include "tabfox/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "tabfox/common.hpp"
#include "tabfox/forest.hpp"
#include "tabfox/parallel.hpp"
#include "tabfox/rng.hpp"

namespace tabfox {

namespace {

constexpr double kMinGain = 1e-12;
constexpr double kPriorFloor = 1e-12;

struct GbtSplit {
    bool found = false;
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

// Grows one regression tree on (g, h) statistics. Candidate thresholds sit at
// midpoints between consecutive distinct feature values; a split is kept only
// if its gain is strictly positive. min_child_weight stops nodes whose
// hessian mass has decayed, which is what ends boosting on saturated rows.
//
// Rows are sorted once per (tree, column) and kept partitioned: a node owns
// the slice [lo, hi) of every per-column order, so split scans never re-sort.
class GbtTreeGrower {
public:
    GbtTreeGrower(const Dataset& ds, const GbtConfig& cfg,
                  const std::vector<double>& grad, const std::vector<double>& hess,
                  const std::vector<std::size_t>& columns)
        : ds_(ds), cfg_(cfg), grad_(grad), hess_(hess), columns_(columns) {}

    Tree grow(const std::vector<std::size_t>& rows) {
        // at least one order so node (g, h) sums can always be read from slot 0
        orders_.assign(std::max<std::size_t>(columns_.size(), 1), rows);
        for (std::size_t c = 0; c < columns_.size(); ++c) {
            std::size_t f = columns_[c];
            std::sort(orders_[c].begin(), orders_[c].end(), [&](std::size_t a, std::size_t b) {
                double va = ds_.at(a, f), vb = ds_.at(b, f);
                if (va != vb) return va < vb;
                return a < b;
            });
        }
        scratch_.resize(rows.size());
        Tree tree;
        grow_node(tree, 0, rows.size(), 0);
        return tree;
    }

private:
    int grow_node(Tree& tree, std::size_t lo, std::size_t hi, int depth) {
        double g_sum = 0.0, h_sum = 0.0;
        if (!orders_.empty()) {
            for (std::size_t i = lo; i < hi; ++i) {
                g_sum += grad_[orders_[0][i]];
                h_sum += hess_[orders_[0][i]];
            }
        }

        GbtSplit best;
        if (depth < cfg_.max_depth && hi - lo >= 2 && h_sum >= cfg_.min_child_weight) {
            best = find_split(lo, hi, g_sum, h_sum);
        }

        int idx = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.back().cover = static_cast<double>(hi - lo);

        if (!best.found) {
            tree.nodes.back().value = {-g_sum / (h_sum + cfg_.reg_lambda) * cfg_.learning_rate};
            return idx;
        }

        // stable partition of every column order around the chosen split
        const std::size_t split_f = static_cast<std::size_t>(best.feature);
        std::size_t n_left = 0;
        for (auto& order : orders_) {
            std::size_t out_left = lo, out_right = 0;
            for (std::size_t i = lo; i < hi; ++i) {
                std::size_t r = order[i];
                if (ds_.at(r, split_f) <= best.threshold) {
                    order[out_left++] = r;
                } else {
                    scratch_[out_right++] = r;
                }
            }
            std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(out_right),
                      order.begin() + static_cast<std::ptrdiff_t>(out_left));
            n_left = out_left - lo;
        }

        tree.nodes[static_cast<std::size_t>(idx)].feature = best.feature;
        tree.nodes[static_cast<std::size_t>(idx)].threshold = best.threshold;
        int left = grow_node(tree, lo, lo + n_left, depth + 1);
        int right = grow_node(tree, lo + n_left, hi, depth + 1);
        tree.nodes[static_cast<std::size_t>(idx)].left = left;
        tree.nodes[static_cast<std::size_t>(idx)].right = right;
        return idx;
    }

    GbtSplit find_split(std::size_t lo, std::size_t hi, double g_sum, double h_sum) {
        GbtSplit best;
        for (std::size_t c = 0; c < columns_.size(); ++c) {
            const std::size_t f = columns_[c];
            const auto& order = orders_[c];
            if (ds_.at(order[lo], f) == ds_.at(order[hi - 1], f)) continue;

            double g_left = 0.0, h_left = 0.0;
            for (std::size_t i = lo + 1; i < hi; ++i) {
                g_left += grad_[order[i - 1]];
                h_left += hess_[order[i - 1]];
                double prev = ds_.at(order[i - 1], f);
                double cur = ds_.at(order[i], f);
                if (cur <= prev) continue;

                double gain = split_gain(g_left, h_left, g_sum - g_left, h_sum - h_left,
                                         cfg_.reg_lambda, cfg_.gamma);
                double threshold = prev + 0.5 * (cur - prev);

                bool better = gain > best.gain;
                if (best.found && gain == best.gain) {
                    better = static_cast<int>(f) < best.feature ||
                             (static_cast<int>(f) == best.feature && threshold < best.threshold);
                }
                if ((best.found ? better : gain > kMinGain) && gain > kMinGain) {
                    best.found = true;
                    best.gain = gain;
                    best.feature = static_cast<int>(f);
                    best.threshold = threshold;
                }
            }
        }
        return best;
    }

    const Dataset& ds_;
    const GbtConfig& cfg_;
    const std::vector<double>& grad_;
    const std::vector<double>& hess_;
    const std::vector<std::size_t>& columns_;
    std::vector<std::vector<std::size_t>> orders_; // per column, node-partitioned
    std::vector<std::size_t> scratch_;
};

double multiclass_log_loss(const std::vector<double>& logits, const std::vector<int>& labels,
                           std::size_t n_classes) {
    const std::size_t n = labels.size();
    double loss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        std::span<const double> row_logits(logits.data() + r * n_classes, n_classes);
        auto p = softmax(row_logits);
        double py = p[static_cast<std::size_t>(labels[r])];
        loss -= std::log(std::max(py, kPriorFloor));
    }
    return loss / static_cast<double>(n);
}

} // namespace

void GbtConfig::validate() const {
    if (n_rounds < 1) throw Error("gbt: n_rounds must be positive");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
        throw Error("gbt: learning_rate must be in (0, 1]");
    }
    if (max_depth < 1) throw Error("gbt: max_depth must be positive");
    if (min_child_weight < 0.0) throw Error("gbt: min_child_weight must be >= 0");
    if (reg_lambda < 0.0) throw Error("gbt: reg_lambda must be >= 0");
    if (gamma < 0.0) throw Error("gbt: gamma must be >= 0");
    if (!(subsample > 0.0 && subsample <= 1.0)) throw Error("gbt: subsample must be in (0, 1]");
    if (!(colsample > 0.0 && colsample <= 1.0)) throw Error("gbt: colsample must be in (0, 1]");
}

std::vector<double> softmax(std::span<const double> logits) {
    double max_logit = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        p[k] = std::exp(logits[k] - max_logit);
        sum += p[k];
    }
    for (double& v : p) v /= sum;
    return p;
}

std::pair<std::vector<double>, std::vector<double>> softmax_gradients(
    std::span<const double> logits, int true_class) {
    for (double v : logits) {
        if (!std::isfinite(v)) throw Error("softmax_gradients: non-finite logit");
    }
    if (true_class < 0 || static_cast<std::size_t>(true_class) >= logits.size()) {
        throw Error("softmax_gradients: true_class out of range");
    }
    auto p = softmax(logits);
    std::vector<double> g(p.size()), h(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
        g[k] = p[k] - (static_cast<int>(k) == true_class ? 1.0 : 0.0);
        h[k] = p[k] * (1.0 - p[k]);
    }
    return {std::move(g), std::move(h)};
}

double split_gain(double g_left, double h_left, double g_right, double h_right,
                  double reg_lambda, double gamma) {
    auto score = [reg_lambda](double g, double h) { return g * g / (h + reg_lambda); };
    return 0.5 * (score(g_left, h_left) + score(g_right, h_right) -
                  score(g_left + g_right, h_left + h_right)) -
           gamma;
}

GbtModel fit_gbt(const Dataset& train, const GbtConfig& cfg, std::vector<double>* loss_trace) {
    cfg.validate();
    if (train.n_rows() == 0) throw Error("fit_gbt: empty dataset");
    const std::size_t n = train.n_rows();
    const std::size_t n_classes = train.n_classes();
    const std::size_t m = train.n_features();
    {
        auto counts = class_distribution(train);
        std::size_t present = 0;
        for (std::size_t c : counts) present += (c > 0);
        if (present < 2) throw Error("fit_gbt: need at least 2 classes present in the data");
    }

    GbtModel model;
    model.config = cfg;
    model.learning_rate = cfg.learning_rate;
    model.n_classes = n_classes;
    model.n_features = m;
    model.base_score.resize(n_classes);
    {
        auto counts = class_distribution(train);
        for (std::size_t k = 0; k < n_classes; ++k) {
            double prior = static_cast<double>(counts[k]) / static_cast<double>(n);
            model.base_score[k] = std::log(std::max(prior, kPriorFloor));
        }
    }

    std::vector<double> logits(n * n_classes);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t k = 0; k < n_classes; ++k) logits[r * n_classes + k] = model.base_score[k];
    }

    if (loss_trace) loss_trace->clear();
    std::vector<double> grad(n), hess(n);
    std::vector<std::vector<double>> g_all(n_classes, std::vector<double>(n));
    std::vector<std::vector<double>> h_all(n_classes, std::vector<double>(n));

    for (int round = 0; round < cfg.n_rounds; ++round) {
        // one row sample per round, shared by that round's class trees
        std::vector<std::size_t> rows;
        if (cfg.subsample < 1.0) {
            std::size_t count = std::max<std::size_t>(
                1, static_cast<std::size_t>(std::floor(cfg.subsample * static_cast<double>(n) + 0.5)));
            Rng row_rng(derive_seed(cfg.seed, {0xB0u, static_cast<std::uint64_t>(round)}));
            rows = row_rng.sample_without_replacement(n, count);
            std::sort(rows.begin(), rows.end());
        } else {
            rows.resize(n);
            std::iota(rows.begin(), rows.end(), std::size_t{0});
        }

        for (std::size_t r = 0; r < n; ++r) {
            const double* row_logits = logits.data() + r * n_classes;
            double max_logit = row_logits[0];
            for (std::size_t k = 1; k < n_classes; ++k) max_logit = std::max(max_logit, row_logits[k]);
            double sum = 0.0;
            for (std::size_t k = 0; k < n_classes; ++k) {
                g_all[k][r] = std::exp(row_logits[k] - max_logit);
                sum += g_all[k][r];
            }
            const int y = train.labels[r];
            for (std::size_t k = 0; k < n_classes; ++k) {
                double p = g_all[k][r] / sum;
                g_all[k][r] = p - (static_cast<int>(k) == y ? 1.0 : 0.0);
                h_all[k][r] = p * (1.0 - p);
            }
        }

        std::vector<Tree> round_trees(n_classes);
        parallel_for(n_classes, [&](std::size_t k) {
            std::vector<std::size_t> columns;
            if (cfg.colsample < 1.0 && m > 0) {
                std::size_t count = std::clamp<std::size_t>(
                    static_cast<std::size_t>(std::ceil(cfg.colsample * static_cast<double>(m))), 1, m);
                Rng col_rng(derive_seed(cfg.seed, {0xB1u, static_cast<std::uint64_t>(round), k}));
                columns = col_rng.sample_without_replacement(m, count);
                std::sort(columns.begin(), columns.end());
            } else {
                columns.resize(m);
                std::iota(columns.begin(), columns.end(), std::size_t{0});
            }
            GbtTreeGrower grower(train, cfg, g_all[k], h_all[k], columns);
            round_trees[k] = grower.grow(rows);
        });

        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t k = 0; k < n_classes; ++k) {
                logits[r * n_classes + k] += round_trees[k].evaluate(train.row(r))[0];
            }
        }
        model.trees.push_back(std::move(round_trees));

        if (loss_trace) {
            loss_trace->push_back(multiclass_log_loss(logits, train.labels, n_classes));
        }
    }
    return model;
}

std::vector<double> predict_logits(const GbtModel& model, std::span<const double> row) {
    if (row.size() != model.n_features) {
        throw Error("predict_logits: row has " + std::to_string(row.size()) +
                    " features, model expects " + std::to_string(model.n_features));
    }
    for (double v : row) {
        if (!std::isfinite(v)) throw Error("predict_logits: non-finite input value");
    }
    std::vector<double> logits(model.base_score);
    for (const auto& round_trees : model.trees) {
        for (std::size_t k = 0; k < model.n_classes; ++k) {
            logits[k] += round_trees[k].evaluate(row)[0];
        }
    }
    return logits;
}

std::vector<double> predict_proba(const GbtModel& model, std::span<const double> row) {
    return softmax(predict_logits(model, row));
}

std::vector<int> predict(const GbtModel& model, const Dataset& ds) {
    std::vector<int> out(ds.n_rows());
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
        auto logits = predict_logits(model, ds.row(r));
        out[r] = argmax_class(logits);
    }
    return out;
}

nlohmann::json gbt_to_json(const GbtModel& model) {
    nlohmann::json cfg{{"n_rounds", model.config.n_rounds},
                       {"learning_rate", model.config.learning_rate},
                       {"max_depth", model.config.max_depth},
                       {"min_child_weight", model.config.min_child_weight},
                       {"reg_lambda", model.config.reg_lambda},
                       {"gamma", model.config.gamma},
                       {"subsample", model.config.subsample},
                       {"colsample", model.config.colsample},
                       {"seed", model.config.seed}};
    nlohmann::json rounds = nlohmann::json::array();
    for (const auto& round_trees : model.trees) {
        nlohmann::json per_class = nlohmann::json::array();
        for (const Tree& tree : round_trees) per_class.push_back(tree_to_json(tree));
        rounds.push_back(std::move(per_class));
    }
    return nlohmann::json{{"format", "tabfox.gbt"},
                          {"version", 1},
                          {"n_classes", model.n_classes},
                          {"n_features", model.n_features},
                          {"base_score", model.base_score},
                          {"learning_rate", model.learning_rate},
                          {"config", std::move(cfg)},
                          {"trees", std::move(rounds)}};
}

GbtModel gbt_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "tabfox.gbt" || j.value("version", 0) != 1) {
        throw Error("gbt_from_json: not a tabfox.gbt v1 document");
    }
    GbtModel model;
    model.n_classes = j.at("n_classes").get<std::size_t>();
    model.n_features = j.at("n_features").get<std::size_t>();
    model.base_score = j.at("base_score").get<std::vector<double>>();
    model.learning_rate = j.at("learning_rate").get<double>();
    const auto& cfg = j.at("config");
    model.config.n_rounds = cfg.at("n_rounds").get<int>();
    model.config.learning_rate = cfg.at("learning_rate").get<double>();
    model.config.max_depth = cfg.at("max_depth").get<int>();
    model.config.min_child_weight = cfg.at("min_child_weight").get<double>();
    model.config.reg_lambda = cfg.at("reg_lambda").get<double>();
    model.config.gamma = cfg.at("gamma").get<double>();
    model.config.subsample = cfg.at("subsample").get<double>();
    model.config.colsample = cfg.at("colsample").get<double>();
    model.config.seed = cfg.at("seed").get<std::uint64_t>();
    for (const auto& round_json : j.at("trees")) {
        std::vector<Tree> round_trees;
        for (const auto& tj : round_json) round_trees.push_back(tree_from_json(tj, 1));
        model.trees.push_back(std::move(round_trees));
    }
    return model;
}

void save_gbt(const GbtModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out.is_open()) throw Error("save_gbt: cannot open '" + path + "'");
    out << gbt_to_json(model).dump(2) << '\n';
}

GbtModel load_gbt(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.is_open()) throw Error("load_gbt: cannot open '" + path + "'");
    nlohmann::json j;
    in >> j;
    return gbt_from_json(j);
}

} // namespace tabfox
