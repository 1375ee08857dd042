#include "tabfox/tune.hpp"

#include <algorithm>
#include <cmath>

#include "tabfox/common.hpp"
#include "tabfox/report.hpp"
#include "tabfox/rng.hpp"

namespace tabfox {

namespace {

const ParamSpec* find_param(const SearchSpace& space, const std::string& name) {
    for (const auto& p : space.params) {
        if (p.name == name) return &p;
    }
    return nullptr;
}

double fold_score(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                  std::size_t n_classes, TuneMetric metric) {
    if (metric == TuneMetric::Accuracy) {
        std::size_t correct = 0;
        for (std::size_t i = 0; i < y_true.size(); ++i) correct += (y_true[i] == y_pred[i]);
        return static_cast<double>(correct) / static_cast<double>(y_true.size());
    }
    MetricsReport report = metrics(y_true, y_pred, n_classes);
    return report.weighted_f1;
}

} // namespace

void ParamSpec::validate() const {
    if (name.empty()) throw Error("param spec: empty name");
    if (!(lo < hi)) throw Error("param spec '" + name + "': lo must be < hi");
    if (kind == ParamKind::LogReal && !(lo > 0.0)) {
        throw Error("param spec '" + name + "': log_real requires lo > 0");
    }
}

void SearchSpace::validate() const {
    if (params.empty()) throw Error("search space: no parameters");
    for (const auto& p : params) p.validate();
    for (std::size_t i = 0; i < params.size(); ++i) {
        for (std::size_t j = i + 1; j < params.size(); ++j) {
            if (params[i].name == params[j].name) {
                throw Error("search space: duplicate parameter '" + params[i].name + "'");
            }
        }
    }
}

SearchSpace default_forest_space() {
    SearchSpace space;
    space.model_kind = ModelKind::Forest;
    space.params = {{"n_trees", ParamKind::Integer, 10, 300},
                    {"max_depth", ParamKind::Integer, 2, 20},
                    {"min_samples_leaf", ParamKind::Integer, 1, 10},
                    {"max_features_fraction", ParamKind::Real, 0.1, 1.0}};
    return space;
}

SearchSpace default_gbt_space() {
    SearchSpace space;
    space.model_kind = ModelKind::Gbt;
    space.params = {{"n_rounds", ParamKind::Integer, 20, 300},
                    {"learning_rate", ParamKind::LogReal, 1e-3, 0.5},
                    {"max_depth", ParamKind::Integer, 2, 10},
                    {"min_child_weight", ParamKind::Real, 0, 10},
                    {"reg_lambda", ParamKind::LogReal, 1e-3, 10},
                    {"gamma", ParamKind::Real, 0, 5},
                    {"subsample", ParamKind::Real, 0.5, 1.0},
                    {"colsample", ParamKind::Real, 0.5, 1.0}};
    return space;
}

std::map<std::string, double> decode(const std::vector<double>& x, const SearchSpace& space) {
    if (x.size() != space.dim()) throw Error("decode: vector length does not match space");
    std::map<std::string, double> out;
    for (std::size_t d = 0; d < x.size(); ++d) {
        const ParamSpec& p = space.params[d];
        double u = std::clamp(x[d], 0.0, 1.0);
        double v = 0.0;
        switch (p.kind) {
        case ParamKind::Real:
            v = p.lo + u * (p.hi - p.lo);
            break;
        case ParamKind::LogReal:
            v = std::exp(std::log(p.lo) + u * (std::log(p.hi) - std::log(p.lo)));
            break;
        case ParamKind::Integer:
            v = std::clamp(std::floor(p.lo + u * (p.hi - p.lo) + 0.5), p.lo, p.hi);
            break;
        }
        out[p.name] = v;
    }
    return out;
}

std::vector<double> encode(const std::map<std::string, double>& params, const SearchSpace& space) {
    std::vector<double> x(space.dim());
    for (std::size_t d = 0; d < space.dim(); ++d) {
        const ParamSpec& p = space.params[d];
        auto it = params.find(p.name);
        if (it == params.end()) throw Error("encode: missing parameter '" + p.name + "'");
        double v = std::clamp(it->second, p.lo, p.hi);
        double u = 0.0;
        if (p.kind == ParamKind::LogReal) {
            u = (std::log(v) - std::log(p.lo)) / (std::log(p.hi) - std::log(p.lo));
        } else {
            u = (v - p.lo) / (p.hi - p.lo);
        }
        x[d] = std::clamp(u, 0.0, 1.0);
    }
    return x;
}

ForestConfig forest_config_from_params(const std::map<std::string, double>& params) {
    ForestConfig cfg;
    for (const auto& [name, value] : params) {
        if (name == "n_trees") cfg.n_trees = static_cast<int>(value);
        else if (name == "max_depth") cfg.max_depth = static_cast<int>(value);
        else if (name == "min_samples_leaf") cfg.min_samples_leaf = static_cast<int>(value);
        else if (name == "max_features_fraction") cfg.max_features_fraction = value;
        else throw Error("forest config: unknown parameter '" + name + "'");
    }
    return cfg;
}

GbtConfig gbt_config_from_params(const std::map<std::string, double>& params) {
    GbtConfig cfg;
    for (const auto& [name, value] : params) {
        if (name == "n_rounds") cfg.n_rounds = static_cast<int>(value);
        else if (name == "learning_rate") cfg.learning_rate = value;
        else if (name == "max_depth") cfg.max_depth = static_cast<int>(value);
        else if (name == "min_child_weight") cfg.min_child_weight = value;
        else if (name == "reg_lambda") cfg.reg_lambda = value;
        else if (name == "gamma") cfg.gamma = value;
        else if (name == "subsample") cfg.subsample = value;
        else if (name == "colsample") cfg.colsample = value;
        else throw Error("gbt config: unknown parameter '" + name + "'");
    }
    return cfg;
}

std::map<std::string, double> baseline_params(const SearchSpace& space, std::size_t n_features) {
    std::map<std::string, double> defaults;
    if (space.model_kind == ModelKind::Forest) {
        ForestConfig cfg;
        defaults["n_trees"] = cfg.n_trees;
        defaults["min_samples_leaf"] = cfg.min_samples_leaf;
        // unlimited depth and the sqrt fraction have no literal encoding;
        // stand in with the top of the depth range and sqrt(M)/M.
        if (const ParamSpec* p = find_param(space, "max_depth")) defaults["max_depth"] = p->hi;
        double sqrt_frac = n_features > 0
                               ? std::sqrt(static_cast<double>(n_features)) /
                                     static_cast<double>(n_features)
                               : 1.0;
        defaults["max_features_fraction"] = sqrt_frac;
    } else {
        GbtConfig cfg;
        defaults["n_rounds"] = cfg.n_rounds;
        defaults["learning_rate"] = cfg.learning_rate;
        defaults["max_depth"] = cfg.max_depth;
        defaults["min_child_weight"] = cfg.min_child_weight;
        defaults["reg_lambda"] = cfg.reg_lambda;
        defaults["gamma"] = cfg.gamma;
        defaults["subsample"] = cfg.subsample;
        defaults["colsample"] = cfg.colsample;
    }
    std::map<std::string, double> out;
    for (const auto& p : space.params) {
        auto it = defaults.find(p.name);
        double v = it != defaults.end() ? it->second : p.lo;
        out[p.name] = std::clamp(v, p.lo, p.hi);
    }
    return out;
}

Objective cv_objective(const Dataset& train, const SearchSpace& space, int folds,
                       std::uint64_t seed, TuneMetric metric) {
    space.validate();
    if (folds < 2) throw Error("cv_objective: folds must be >= 2");
    if (static_cast<std::size_t>(folds) > train.n_rows()) {
        throw Error("cv_objective: more folds than rows");
    }

    // Stratified fold assignment, fixed once. -1 pins a row to every
    // training fold (singleton classes cannot be held out).
    std::vector<int> fold_of(train.n_rows(), -1);
    {
        Rng rng(derive_seed(seed, {0xC0u}));
        std::vector<std::vector<std::size_t>> by_class(train.n_classes());
        for (std::size_t r = 0; r < train.n_rows(); ++r) {
            by_class[static_cast<std::size_t>(train.labels[r])].push_back(r);
        }
        for (auto& members : by_class) {
            if (members.size() < 2) continue;
            rng.shuffle(members);
            for (std::size_t i = 0; i < members.size(); ++i) {
                fold_of[members[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
            }
        }
    }

    Dataset data = train; // owned copy so the objective is self-contained
    return [data = std::move(data), space, folds, seed, metric,
            fold_of = std::move(fold_of)](const std::vector<double>& x) {
        auto params = decode(x, space);
        double total = 0.0;
        int used_folds = 0;
        for (int f = 0; f < folds; ++f) {
            std::vector<std::size_t> fit_rows, val_rows;
            for (std::size_t r = 0; r < data.n_rows(); ++r) {
                if (fold_of[r] == f) val_rows.push_back(r);
                else fit_rows.push_back(r);
            }
            if (val_rows.empty() || fit_rows.empty()) continue;
            Dataset fit_ds = take_rows(data, fit_rows);
            Dataset val_ds = take_rows(data, val_rows);

            std::vector<int> y_pred;
            if (space.model_kind == ModelKind::Forest) {
                ForestConfig cfg = forest_config_from_params(params);
                cfg.seed = derive_seed(seed, {0xC1u, static_cast<std::uint64_t>(f)});
                y_pred = predict(fit_forest(fit_ds, cfg), val_ds);
            } else {
                GbtConfig cfg = gbt_config_from_params(params);
                cfg.seed = derive_seed(seed, {0xC1u, static_cast<std::uint64_t>(f)});
                y_pred = predict(fit_gbt(fit_ds, cfg), val_ds);
            }
            total += fold_score(val_ds.labels, y_pred, data.n_classes(), metric);
            ++used_folds;
        }
        if (used_folds == 0) {
            throw Error("cv_objective: no fold has validation rows (too few samples per class)");
        }
        return 1.0 - total / static_cast<double>(used_folds);
    };
}

TuneResult tune(const Dataset& train, const SearchSpace& space, const FoxConfig& fox_cfg,
                int folds, std::uint64_t seed, TuneMetric metric) {
    Objective objective = cv_objective(train, space, folds, seed, metric);
    auto baseline = baseline_params(space, train.n_features());
    std::vector<double> x0 = encode(baseline, space);

    Bounds unit_box{std::vector<double>(space.dim(), 0.0), std::vector<double>(space.dim(), 1.0)};
    OptResult opt = fox_optimize(objective, unit_box, fox_cfg, {x0});

    TuneResult result;
    result.model_kind = space.model_kind;
    result.best_params = decode(opt.best_x, space);
    if (space.model_kind == ModelKind::Forest) {
        result.best_config = forest_config_from_params(result.best_params);
    } else {
        result.best_config = gbt_config_from_params(result.best_params);
    }
    result.best_cv_score = 1.0 - opt.best_fitness;
    result.baseline_cv_score = 1.0 - objective(x0);
    result.trace = opt.history;
    return result;
}

nlohmann::json tune_result_to_json(const TuneResult& result) {
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [name, value] : result.best_params) params[name] = value;
    nlohmann::json config;
    if (std::holds_alternative<ForestConfig>(result.best_config)) {
        const auto& cfg = std::get<ForestConfig>(result.best_config);
        config = {{"n_trees", cfg.n_trees},
                  {"max_depth", cfg.max_depth ? nlohmann::json(*cfg.max_depth) : nlohmann::json(nullptr)},
                  {"min_samples_leaf", cfg.min_samples_leaf},
                  {"max_features_fraction",
                   cfg.max_features_fraction ? nlohmann::json(*cfg.max_features_fraction)
                                             : nlohmann::json(nullptr)},
                  {"bootstrap", cfg.bootstrap}};
    } else {
        const auto& cfg = std::get<GbtConfig>(result.best_config);
        config = {{"n_rounds", cfg.n_rounds},       {"learning_rate", cfg.learning_rate},
                  {"max_depth", cfg.max_depth},     {"min_child_weight", cfg.min_child_weight},
                  {"reg_lambda", cfg.reg_lambda},   {"gamma", cfg.gamma},
                  {"subsample", cfg.subsample},     {"colsample", cfg.colsample}};
    }
    return nlohmann::json{{"format", "tabfox.tune"},
                          {"version", 1},
                          {"model", to_string(result.model_kind)},
                          {"best_params", std::move(params)},
                          {"best_config", std::move(config)},
                          {"best_cv_score", result.best_cv_score},
                          {"baseline_cv_score", result.baseline_cv_score},
                          {"trace", result.trace}};
}

SearchSpace search_space_from_json(const nlohmann::json& j) {
    SearchSpace space;
    space.model_kind = model_kind_from_string(j.at("model").get<std::string>());
    for (const auto& item : j.at("params")) {
        ParamSpec p;
        p.name = item.at("name").get<std::string>();
        std::string kind = item.at("kind").get<std::string>();
        if (kind == "integer") p.kind = ParamKind::Integer;
        else if (kind == "real") p.kind = ParamKind::Real;
        else if (kind == "log_real") p.kind = ParamKind::LogReal;
        else throw Error("search space: unknown kind '" + kind + "'");
        p.lo = item.at("lo").get<double>();
        p.hi = item.at("hi").get<double>();
        space.params.push_back(std::move(p));
    }
    space.validate();
    return space;
}

nlohmann::json search_space_to_json(const SearchSpace& space) {
    nlohmann::json params = nlohmann::json::array();
    for (const auto& p : space.params) {
        std::string kind = p.kind == ParamKind::Integer  ? "integer"
                           : p.kind == ParamKind::Real   ? "real"
                                                         : "log_real";
        params.push_back({{"name", p.name}, {"kind", kind}, {"lo", p.lo}, {"hi", p.hi}});
    }
    return nlohmann::json{{"model", to_string(space.model_kind)}, {"params", std::move(params)}};
}

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "forest") return ModelKind::Forest;
    if (name == "gbt") return ModelKind::Gbt;
    throw Error("unknown model kind '" + name + "' (expected forest or gbt)");
}

std::string to_string(ModelKind kind) { return kind == ModelKind::Forest ? "forest" : "gbt"; }

} // namespace tabfox
