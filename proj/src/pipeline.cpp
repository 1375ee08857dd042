#include "tabfox/pipeline.hpp"

#include <filesystem>
#include <fstream>

#include "tabfox/common.hpp"
#include "tabfox/explain.hpp"
#include "tabfox/forest.hpp"
#include "tabfox/gbt.hpp"
#include "tabfox/parallel.hpp"
#include "tabfox/rng.hpp"
#include "tabfox/synthetic.hpp"
#include "tabfox/tune.hpp"

namespace tabfox {

namespace {

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
    try {
        return fn();
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw Error(std::string("stage '") + name + "': " + e.what());
    }
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out.is_open()) throw Error("cannot open '" + path.string() + "' for writing");
    out << content;
    if (!out) throw Error("write to '" + path.string() + "' failed");
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    write_text(path, j.dump(2) + "\n");
}

} // namespace

void PipelineConfig::validate() const {
    if (top_k < 1) throw Error("pipeline config: top_k must be >= 1");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw Error("pipeline config: test_fraction must be in (0, 1)");
    }
    if (folds < 2) throw Error("pipeline config: folds must be >= 2");
    if (fox_pop_size < 2 || fox_max_iters < 1) {
        throw Error("pipeline config: fox settings need pop_size >= 2 and max_iters >= 1");
    }
    if (!run_forest && !run_gbt) throw Error("pipeline config: no model kinds enabled");
    if (output_dir.empty()) throw Error("pipeline config: output_dir must be set");
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
    PipelineConfig cfg;
    cfg.input = j.value("input", cfg.input);
    cfg.label_column = j.value("label_column", cfg.label_column);
    cfg.top_k = j.value("top_k", cfg.top_k);
    if (j.contains("normalizer")) {
        cfg.normalizer = normalizer_kind_from_string(j.at("normalizer").get<std::string>());
    }
    cfg.test_fraction = j.value("test_fraction", cfg.test_fraction);
    cfg.stratified = j.value("stratified", cfg.stratified);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("models")) {
        cfg.run_forest = false;
        cfg.run_gbt = false;
        for (const auto& m : j.at("models")) {
            ModelKind kind = model_kind_from_string(m.get<std::string>());
            if (kind == ModelKind::Forest) cfg.run_forest = true;
            else cfg.run_gbt = true;
        }
    }
    cfg.tuning = j.value("tune", cfg.tuning);
    if (j.contains("fox")) {
        cfg.fox_pop_size = j.at("fox").value("pop_size", cfg.fox_pop_size);
        cfg.fox_max_iters = j.at("fox").value("max_iters", cfg.fox_max_iters);
    }
    cfg.folds = j.value("folds", cfg.folds);
    if (j.contains("leakage_mode")) {
        std::string mode = j.at("leakage_mode").get<std::string>();
        if (mode == "safe") cfg.leakage = LeakageMode::Safe;
        else if (mode == "paper-order") cfg.leakage = LeakageMode::PaperOrder;
        else throw Error("pipeline config: unknown leakage_mode '" + mode + "'");
    }
    if (j.contains("explain")) {
        cfg.explain_max_exact = j.at("explain").value("max_features_exact", cfg.explain_max_exact);
        cfg.explain_permutations = j.at("explain").value("n_permutations", cfg.explain_permutations);
    }
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    if (j.contains("synthetic")) {
        cfg.synth_rows = j.at("synthetic").value("rows", cfg.synth_rows);
        cfg.synth_features = j.at("synthetic").value("features", cfg.synth_features);
    }
    cfg.validate();
    return cfg;
}

nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg) {
    nlohmann::json models = nlohmann::json::array();
    if (cfg.run_forest) models.push_back("forest");
    if (cfg.run_gbt) models.push_back("gbt");
    return nlohmann::json{
        {"input", cfg.input},
        {"label_column", cfg.label_column},
        {"top_k", cfg.top_k},
        {"normalizer", to_string(cfg.normalizer)},
        {"test_fraction", cfg.test_fraction},
        {"stratified", cfg.stratified},
        {"seed", cfg.seed},
        {"models", models},
        {"tune", cfg.tuning},
        {"fox", {{"pop_size", cfg.fox_pop_size}, {"max_iters", cfg.fox_max_iters}}},
        {"folds", cfg.folds},
        {"leakage_mode", cfg.leakage == LeakageMode::Safe ? "safe" : "paper-order"},
        {"explain",
         {{"max_features_exact", cfg.explain_max_exact},
          {"n_permutations", cfg.explain_permutations}}},
        {"output_dir", cfg.output_dir},
        {"synthetic", {{"rows", cfg.synth_rows}, {"features", cfg.synth_features}}}};
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
    cfg.validate();
    namespace fs = std::filesystem;
    const fs::path out_dir(cfg.output_dir);
    fs::create_directories(out_dir);
    fs::create_directories(out_dir / "models");
    fs::create_directories(out_dir / "metrics");
    fs::create_directories(out_dir / "explain");
    fs::create_directories(out_dir / "tune");

    // every random decision gets its own derived seed, all recorded below
    const std::uint64_t split_seed = derive_seed(cfg.seed, {1});
    const std::uint64_t rank_seed = derive_seed(cfg.seed, {2});
    const std::uint64_t forest_seed = derive_seed(cfg.seed, {3});
    const std::uint64_t gbt_seed = derive_seed(cfg.seed, {4});
    const std::uint64_t tune_forest_seed = derive_seed(cfg.seed, {5});
    const std::uint64_t tune_gbt_seed = derive_seed(cfg.seed, {6});
    const std::uint64_t explain_seed = derive_seed(cfg.seed, {7});

    Dataset full = stage("load", [&] {
        if (cfg.input.empty()) {
            return make_synthetic(cfg.synth_rows, cfg.synth_features, cfg.seed);
        }
        return load_csv(cfg.input, cfg.label_column);
    });

    GiniRanking ranking;
    NormalizerParams norm_params;
    Dataset train, test;

    SplitSpec split_spec{cfg.test_fraction, split_seed, cfg.stratified};
    if (cfg.leakage == LeakageMode::Safe) {
        std::tie(train, test) = stage("split", [&] { return split(full, split_spec); });
        ranking = stage("rank", [&] {
            return rank_features_gini(train, importance_forest_defaults(), rank_seed);
        });
        stage("select", [&] {
            train = select_top_k(train, ranking, cfg.top_k);
            test = select_top_k(test, ranking, cfg.top_k);
            return 0;
        });
        stage("normalize", [&] {
            norm_params = fit_normalizer(train, cfg.normalizer);
            train = apply_normalizer(train, norm_params);
            test = apply_normalizer(test, norm_params);
            return 0;
        });
    } else {
        ranking = stage("rank", [&] {
            return rank_features_gini(full, importance_forest_defaults(), rank_seed);
        });
        Dataset selected = stage("select", [&] { return select_top_k(full, ranking, cfg.top_k); });
        stage("normalize", [&] {
            norm_params = fit_normalizer(selected, cfg.normalizer);
            selected = apply_normalizer(selected, norm_params);
            return 0;
        });
        std::tie(train, test) = stage("split", [&] { return split(selected, split_spec); });
    }
    if (test.n_rows() == 0) {
        throw Error("stage 'split': test split is empty; raise test_fraction or add rows");
    }

    write_text(out_dir / "ranking.csv", ranking_to_csv(ranking, full.feature_names));
    write_json(out_dir / "ranking.json", ranking_to_json(ranking, full.feature_names));
    write_json(out_dir / "normalizer.json", normalizer_to_json(norm_params));

    struct ModelRun {
        std::string name;
        ModelKind kind;
        std::vector<int> predictions;
        MetricsReport report;
    };
    std::vector<ModelRun> runs;
    nlohmann::json tune_summaries = nlohmann::json::object();

    ForestModel forest_baseline, forest_tuned;
    GbtModel gbt_baseline, gbt_tuned;
    bool have_forest_tuned = false, have_gbt_tuned = false;

    if (cfg.run_forest) {
        ForestConfig base_cfg;
        base_cfg.seed = forest_seed;
        forest_baseline = stage("train-forest", [&] { return fit_forest(train, base_cfg); });
        save_forest(forest_baseline, (out_dir / "models" / "forest_baseline.json").string());
        runs.push_back({"forest_baseline", ModelKind::Forest, {}, {}});

        if (cfg.tuning) {
            TuneResult tr = stage("tune-forest", [&] {
                FoxConfig fox{cfg.fox_pop_size, cfg.fox_max_iters, tune_forest_seed, 0.18, 0.82};
                return tune(train, default_forest_space(), fox, cfg.folds, tune_forest_seed);
            });
            write_json(out_dir / "tune" / "forest.json", tune_result_to_json(tr));
            tune_summaries["forest"] = {{"best_cv_score", tr.best_cv_score},
                                        {"baseline_cv_score", tr.baseline_cv_score}};
            ForestConfig tuned_cfg = std::get<ForestConfig>(tr.best_config);
            tuned_cfg.seed = forest_seed;
            forest_tuned = stage("train-forest", [&] { return fit_forest(train, tuned_cfg); });
            save_forest(forest_tuned, (out_dir / "models" / "forest_tuned.json").string());
            runs.push_back({"forest_tuned", ModelKind::Forest, {}, {}});
            have_forest_tuned = true;
        }
    }
    if (cfg.run_gbt) {
        GbtConfig base_cfg;
        base_cfg.seed = gbt_seed;
        gbt_baseline = stage("train-gbt", [&] { return fit_gbt(train, base_cfg); });
        save_gbt(gbt_baseline, (out_dir / "models" / "gbt_baseline.json").string());
        runs.push_back({"gbt_baseline", ModelKind::Gbt, {}, {}});

        if (cfg.tuning) {
            TuneResult tr = stage("tune-gbt", [&] {
                FoxConfig fox{cfg.fox_pop_size, cfg.fox_max_iters, tune_gbt_seed, 0.18, 0.82};
                return tune(train, default_gbt_space(), fox, cfg.folds, tune_gbt_seed);
            });
            write_json(out_dir / "tune" / "gbt.json", tune_result_to_json(tr));
            tune_summaries["gbt"] = {{"best_cv_score", tr.best_cv_score},
                                     {"baseline_cv_score", tr.baseline_cv_score}};
            GbtConfig tuned_cfg = std::get<GbtConfig>(tr.best_config);
            tuned_cfg.seed = gbt_seed;
            gbt_tuned = stage("train-gbt", [&] { return fit_gbt(train, tuned_cfg); });
            save_gbt(gbt_tuned, (out_dir / "models" / "gbt_tuned.json").string());
            runs.push_back({"gbt_tuned", ModelKind::Gbt, {}, {}});
            have_gbt_tuned = true;
        }
    }

    // fixed comparison order: forest baseline/tuned, then gbt baseline/tuned
    std::sort(runs.begin(), runs.end(), [](const ModelRun& a, const ModelRun& b) {
        auto rank = [](const std::string& name) {
            if (name == "forest_baseline") return 0;
            if (name == "forest_tuned") return 1;
            if (name == "gbt_baseline") return 2;
            return 3;
        };
        return rank(a.name) < rank(b.name);
    });

    stage("evaluate", [&] {
        for (ModelRun& run : runs) {
            if (run.name == "forest_baseline") run.predictions = predict(forest_baseline, test);
            else if (run.name == "forest_tuned") run.predictions = predict(forest_tuned, test);
            else if (run.name == "gbt_baseline") run.predictions = predict(gbt_baseline, test);
            else run.predictions = predict(gbt_tuned, test);
            run.report = metrics(test.labels, run.predictions, test.n_classes());
            write_json(out_dir / "metrics" / (run.name + ".metrics.json"),
                       metrics_to_json(run.report, test.class_names));
            write_text(out_dir / "metrics" / (run.name + ".confusion.csv"),
                       confusion_to_csv(run.report.confusion, test.class_names));
        }
        return 0;
    });

    std::vector<ComparisonEntry> comparison;
    for (const ModelRun& run : runs) comparison.push_back({run.name, run.report});
    write_text(out_dir / "comparison.csv", comparison_table_csv(comparison));
    write_json(out_dir / "comparison.json", comparison_table_json(comparison));
    write_text(out_dir / "comparison.txt", comparison_table_text(comparison));

    std::size_t best_idx = 0;
    for (std::size_t i = 1; i < runs.size(); ++i) {
        if (runs[i].report.accuracy > runs[best_idx].report.accuracy) best_idx = i;
    }
    const ModelRun& best = runs[best_idx];

    stage("explain", [&] {
        ExplainOptions opts;
        opts.max_features_exact = cfg.explain_max_exact;
        opts.n_permutations = cfg.explain_permutations;
        opts.seed = explain_seed;
        std::vector<Explanation> explanations(test.n_rows());
        parallel_for(test.n_rows(), [&](std::size_t r) {
            if (best.name == "forest_baseline") {
                explanations[r] = shapley_values(forest_baseline, test.row(r), opts);
            } else if (best.name == "forest_tuned") {
                explanations[r] = shapley_values(forest_tuned, test.row(r), opts);
            } else if (best.name == "gbt_baseline") {
                explanations[r] = shapley_values(gbt_baseline, test.row(r), opts);
            } else {
                explanations[r] = shapley_values(gbt_tuned, test.row(r), opts);
            }
        });
        std::vector<std::size_t> row_ids(test.n_rows());
        std::iota(row_ids.begin(), row_ids.end(), std::size_t{0});
        write_text(out_dir / "explain" / "contributions.csv",
                   contributions_to_csv(explanations, row_ids, test.feature_names,
                                        test.class_names));
        write_json(out_dir / "explain" / "contributions.json",
                   explanations_to_json(explanations, row_ids, test.feature_names,
                                        test.class_names));
        SummaryRanking summary = summary_ranking(explanations);
        write_text(out_dir / "explain" / "summary.csv",
                   summary_to_csv(summary, test.feature_names));
        write_text(out_dir / "explain" / "summary.txt",
                   summary_to_text(summary, test.feature_names));
        return 0;
    });

    PipelineResult result;
    result.comparison = comparison;
    result.best_model = best.name;

    nlohmann::json outputs = nlohmann::json::array();
    outputs.push_back("ranking.csv");
    outputs.push_back("ranking.json");
    outputs.push_back("normalizer.json");
    for (const ModelRun& run : runs) {
        outputs.push_back("models/" + run.name + ".json");
        outputs.push_back("metrics/" + run.name + ".metrics.json");
        outputs.push_back("metrics/" + run.name + ".confusion.csv");
    }
    if (have_forest_tuned) outputs.push_back("tune/forest.json");
    if (have_gbt_tuned) outputs.push_back("tune/gbt.json");
    outputs.push_back("comparison.csv");
    outputs.push_back("comparison.json");
    outputs.push_back("comparison.txt");
    outputs.push_back("explain/contributions.csv");
    outputs.push_back("explain/contributions.json");
    outputs.push_back("explain/summary.csv");
    outputs.push_back("explain/summary.txt");

    nlohmann::json accuracies = nlohmann::json::object();
    for (const ModelRun& run : runs) accuracies[run.name] = run.report.accuracy;

    result.manifest = nlohmann::json{
        {"format", "tabfox.manifest"},
        {"version", 1},
        {"config", pipeline_config_to_json(cfg)},
        {"seeds",
         {{"master", cfg.seed},
          {"split", split_seed},
          {"rank", rank_seed},
          {"forest", forest_seed},
          {"gbt", gbt_seed},
          {"tune_forest", tune_forest_seed},
          {"tune_gbt", tune_gbt_seed},
          {"explain", explain_seed}}},
        {"dataset",
         {{"rows", full.n_rows()},
          {"features", full.n_features()},
          {"classes", full.n_classes()},
          {"train_rows", train.n_rows()},
          {"test_rows", test.n_rows()}}},
        {"selected_features", train.feature_names},
        {"results", {{"accuracy", accuracies}, {"tuning", tune_summaries}}},
        {"best_model", best.name},
        {"outputs", outputs}};
    write_json(out_dir / "manifest.json", result.manifest);
    return result;
}

} // namespace tabfox
