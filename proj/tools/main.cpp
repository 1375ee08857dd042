#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tabfox/common.hpp"
#include "tabfox/data.hpp"
#include "tabfox/explain.hpp"
#include "tabfox/forest.hpp"
#include "tabfox/foxopt.hpp"
#include "tabfox/gbt.hpp"
#include "tabfox/pipeline.hpp"
#include "tabfox/preprocess.hpp"
#include "tabfox/report.hpp"
#include "tabfox/rng.hpp"
#include "tabfox/synthetic.hpp"
#include "tabfox/tune.hpp"

namespace {

using tabfox::Error;

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out.is_open()) throw Error("cannot open '" + path + "' for writing");
    out << content;
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.is_open()) throw Error("cannot open '" + path + "'");
    nlohmann::json j;
    in >> j;
    return j;
}

std::vector<std::size_t> parse_row_list(const std::string& text, std::size_t n_rows) {
    std::vector<std::size_t> rows;
    if (text.empty() || text == "all") {
        rows.resize(n_rows);
        for (std::size_t i = 0; i < n_rows; ++i) rows[i] = i;
        return rows;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t r = std::stoull(item);
        if (r >= n_rows) throw Error("row " + item + " out of range (dataset has " +
                                     std::to_string(n_rows) + " rows)");
        rows.push_back(r);
    }
    if (rows.empty()) throw Error("empty row list");
    return rows;
}

struct LoadedModel {
    std::optional<tabfox::ForestModel> forest;
    std::optional<tabfox::GbtModel> gbt;
};

LoadedModel load_any_model(const std::string& path) {
    nlohmann::json j = read_json_file(path);
    std::string format = j.value("format", "");
    LoadedModel model;
    if (format == "tabfox.forest") model.forest = tabfox::forest_from_json(j);
    else if (format == "tabfox.gbt") model.gbt = tabfox::gbt_from_json(j);
    else throw Error("'" + path + "' is not a tabfox model file");
    return model;
}

int run_app(int argc, char** argv) {
    CLI::App app{"tabular classification pipeline with FOX hyperparameter tuning "
                 "and Shapley explanations"};
    app.require_subcommand(1);

    // ---- synth ----------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "write the bundled synthetic dataset as CSV");
    std::string synth_output = "synthetic.csv";
    std::size_t synth_rows = 75, synth_features = 12;
    std::uint64_t synth_seed = 7;
    synth->add_option("--output", synth_output, "output CSV path");
    synth->add_option("--rows", synth_rows, "number of rows");
    synth->add_option("--features", synth_features, "number of features");
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->callback([&] {
        tabfox::Dataset ds = tabfox::make_synthetic(synth_rows, synth_features, synth_seed);
        tabfox::save_csv(ds, synth_output);
        std::cout << "wrote " << ds.n_rows() << " rows x " << ds.n_features() << " features to "
                  << synth_output << "\n";
    });

    // ---- rank-features --------------------------------------------------
    auto* rank = app.add_subcommand("rank-features", "Gini-importance feature ranking");
    std::string rank_input, rank_label = "label", rank_output = "ranking.csv", rank_json;
    std::size_t rank_top_k = 0;
    int rank_trees = 200;
    std::uint64_t rank_seed = 0;
    rank->add_option("--input", rank_input, "input CSV")->required();
    rank->add_option("--label", rank_label, "label column name");
    rank->add_option("--top-k", rank_top_k, "emit only the k best features (0 = all)");
    rank->add_option("--trees", rank_trees, "importance forest size");
    rank->add_option("--seed", rank_seed, "importance forest seed");
    rank->add_option("--output", rank_output, "ranking CSV path");
    rank->add_option("--json", rank_json, "also write ranking JSON here");
    rank->callback([&] {
        tabfox::Dataset ds = tabfox::load_csv(rank_input, rank_label);
        tabfox::ForestConfig cfg = tabfox::importance_forest_defaults();
        cfg.n_trees = rank_trees;
        tabfox::GiniRanking ranking = tabfox::rank_features_gini(ds, cfg, rank_seed);
        if (rank_top_k > 0 && rank_top_k < ranking.order.size()) {
            ranking.order.resize(rank_top_k);
        }
        write_file(rank_output, tabfox::ranking_to_csv(ranking, ds.feature_names));
        if (!rank_json.empty()) {
            write_file(rank_json, tabfox::ranking_to_json(ranking, ds.feature_names).dump(2) + "\n");
        }
        std::cout << "wrote ranking for " << ranking.order.size() << " features to " << rank_output
                  << "\n";
    });

    // ---- train ----------------------------------------------------------
    auto* train = app.add_subcommand("train", "fit a model on a CSV and save it as JSON");
    std::string train_input, train_label = "label", train_model = "forest";
    std::string train_output = "model.json", train_config;
    std::uint64_t train_seed = 0;
    train->add_option("--input", train_input, "input CSV")->required();
    train->add_option("--label", train_label, "label column name");
    train->add_option("--model", train_model, "forest or gbt")
        ->check(CLI::IsMember({"forest", "gbt"}));
    train->add_option("--config", train_config, "JSON file with model parameters");
    train->add_option("--seed", train_seed, "fitting seed");
    train->add_option("--output", train_output, "model JSON path");
    train->callback([&] {
        tabfox::Dataset ds = tabfox::load_csv(train_input, train_label);
        std::map<std::string, double> params;
        if (!train_config.empty()) {
            for (const auto& [key, value] : read_json_file(train_config).items()) {
                params[key] = value.get<double>();
            }
        }
        if (tabfox::model_kind_from_string(train_model) == tabfox::ModelKind::Forest) {
            tabfox::ForestConfig cfg = tabfox::forest_config_from_params(params);
            cfg.seed = train_seed;
            tabfox::save_forest(tabfox::fit_forest(ds, cfg), train_output);
        } else {
            tabfox::GbtConfig cfg = tabfox::gbt_config_from_params(params);
            cfg.seed = train_seed;
            tabfox::save_gbt(tabfox::fit_gbt(ds, cfg), train_output);
        }
        std::cout << "wrote " << train_model << " model to " << train_output << "\n";
    });

    // ---- tune -----------------------------------------------------------
    auto* tune_cmd = app.add_subcommand("tune", "FOX hyperparameter search with k-fold CV");
    std::string tune_input, tune_label = "label", tune_model = "forest";
    std::string tune_output = "tune.json", tune_space, tune_metric = "accuracy";
    int tune_folds = 5, tune_pop = 20, tune_iters = 50;
    std::uint64_t tune_seed = 0;
    tune_cmd->add_option("--input", tune_input, "input CSV")->required();
    tune_cmd->add_option("--label", tune_label, "label column name");
    tune_cmd->add_option("--model", tune_model, "forest or gbt")
        ->check(CLI::IsMember({"forest", "gbt"}));
    tune_cmd->add_option("--folds", tune_folds, "CV folds");
    tune_cmd->add_option("--pop", tune_pop, "FOX population size");
    tune_cmd->add_option("--iters", tune_iters, "FOX iterations");
    tune_cmd->add_option("--seed", tune_seed, "search seed");
    tune_cmd->add_option("--metric", tune_metric, "accuracy or weighted-f1")
        ->check(CLI::IsMember({"accuracy", "weighted-f1"}));
    tune_cmd->add_option("--space", tune_space, "search space JSON (overrides the default)");
    tune_cmd->add_option("--output", tune_output, "result JSON path");
    tune_cmd->callback([&] {
        tabfox::Dataset ds = tabfox::load_csv(tune_input, tune_label);
        tabfox::SearchSpace space;
        if (!tune_space.empty()) {
            space = tabfox::search_space_from_json(read_json_file(tune_space));
        } else if (tabfox::model_kind_from_string(tune_model) == tabfox::ModelKind::Forest) {
            space = tabfox::default_forest_space();
        } else {
            space = tabfox::default_gbt_space();
        }
        tabfox::FoxConfig fox{tune_pop, tune_iters, tune_seed, 0.18, 0.82};
        tabfox::TuneMetric metric = tune_metric == "accuracy" ? tabfox::TuneMetric::Accuracy
                                                              : tabfox::TuneMetric::WeightedF1;
        tabfox::TuneResult result = tabfox::tune(ds, space, fox, tune_folds, tune_seed, metric);
        write_file(tune_output, tabfox::tune_result_to_json(result).dump(2) + "\n");
        std::cout << "best cv score " << result.best_cv_score << " (baseline "
                  << result.baseline_cv_score << "), written to " << tune_output << "\n";
    });

    // ---- evaluate -------------------------------------------------------
    auto* evaluate = app.add_subcommand("evaluate", "score a saved model on a CSV");
    std::string eval_model, eval_input, eval_label = "label", eval_output, eval_confusion;
    evaluate->add_option("--model", eval_model, "model JSON path")->required();
    evaluate->add_option("--input", eval_input, "input CSV")->required();
    evaluate->add_option("--label", eval_label, "label column name");
    evaluate->add_option("--output", eval_output, "write metrics JSON here");
    evaluate->add_option("--confusion", eval_confusion, "write confusion matrix CSV here");
    evaluate->callback([&] {
        tabfox::Dataset ds = tabfox::load_csv(eval_input, eval_label);
        LoadedModel model = load_any_model(eval_model);
        std::vector<int> y_pred = model.forest ? tabfox::predict(*model.forest, ds)
                                               : tabfox::predict(*model.gbt, ds);
        tabfox::MetricsReport report = tabfox::metrics(ds.labels, y_pred, ds.n_classes());
        std::cout << tabfox::metrics_to_text(report, ds.class_names);
        if (!eval_output.empty()) {
            write_file(eval_output, tabfox::metrics_to_json(report, ds.class_names).dump(2) + "\n");
        }
        if (!eval_confusion.empty()) {
            write_file(eval_confusion, tabfox::confusion_to_csv(report.confusion, ds.class_names));
        }
    });

    // ---- explain --------------------------------------------------------
    auto* explain = app.add_subcommand("explain", "Shapley contributions for saved models");
    std::string ex_model, ex_input, ex_label = "label", ex_rows = "all";
    std::string ex_contrib = "contributions.csv", ex_summary = "summary.csv", ex_json;
    std::size_t ex_max_exact = 15, ex_perms = 200;
    std::uint64_t ex_seed = 0;
    explain->add_option("--model", ex_model, "model JSON path")->required();
    explain->add_option("--input", ex_input, "input CSV")->required();
    explain->add_option("--label", ex_label, "label column name");
    explain->add_option("--rows", ex_rows, "comma-separated row indices, or 'all'");
    explain->add_option("--max-exact", ex_max_exact, "exact enumeration cap on feature count");
    explain->add_option("--permutations", ex_perms, "sampling permutations beyond the cap");
    explain->add_option("--seed", ex_seed, "sampling seed");
    explain->add_option("--contributions", ex_contrib, "per-sample contribution CSV path");
    explain->add_option("--summary", ex_summary, "summary ranking CSV path");
    explain->add_option("--json", ex_json, "also write explanations JSON here");
    explain->callback([&] {
        tabfox::Dataset ds = tabfox::load_csv(ex_input, ex_label);
        LoadedModel model = load_any_model(ex_model);
        auto rows = parse_row_list(ex_rows, ds.n_rows());
        tabfox::ExplainOptions opts{ex_max_exact, true, ex_perms, ex_seed};
        std::vector<tabfox::Explanation> explanations;
        explanations.reserve(rows.size());
        for (std::size_t r : rows) {
            if (model.forest) {
                explanations.push_back(tabfox::shapley_values(*model.forest, ds.row(r), opts));
            } else {
                explanations.push_back(tabfox::shapley_values(*model.gbt, ds.row(r), opts));
            }
        }
        write_file(ex_contrib, tabfox::contributions_to_csv(explanations, rows, ds.feature_names,
                                                            ds.class_names));
        tabfox::SummaryRanking summary = tabfox::summary_ranking(explanations);
        write_file(ex_summary, tabfox::summary_to_csv(summary, ds.feature_names));
        if (!ex_json.empty()) {
            write_file(ex_json, tabfox::explanations_to_json(explanations, rows, ds.feature_names,
                                                             ds.class_names)
                                        .dump(2) +
                                    "\n");
        }
        std::cout << tabfox::summary_to_text(summary, ds.feature_names);
    });

    // ---- benchmark-fox --------------------------------------------------
    auto* bench = app.add_subcommand("benchmark-fox",
                                     "compare FOX against random search on benchmarks");
    std::string bench_functions = "all", bench_output = "benchmark.csv";
    std::size_t bench_dim = 10;
    int bench_pop = 30, bench_iters = 500, bench_seeds = 10;
    bench->add_option("--functions", bench_functions, "comma-separated names, or 'all'");
    bench->add_option("--dim", bench_dim, "benchmark dimension");
    bench->add_option("--pop", bench_pop, "FOX population size");
    bench->add_option("--iters", bench_iters, "FOX iterations (budget = pop * (iters + 1))");
    bench->add_option("--seeds", bench_seeds, "number of seeds (1..N)");
    bench->add_option("--output", bench_output, "comparison CSV path");
    bench->callback([&] {
        std::vector<std::string> names;
        if (bench_functions == "all") {
            names = tabfox::benchmark_names();
        } else {
            std::stringstream ss(bench_functions);
            std::string item;
            while (std::getline(ss, item, ',')) names.push_back(item);
        }
        std::vector<std::uint64_t> seeds;
        for (int s = 1; s <= bench_seeds; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
        std::size_t budget =
            static_cast<std::size_t>(bench_pop) * (static_cast<std::size_t>(bench_iters) + 1);
        auto rows = tabfox::compare_optimizers(
            names,
            {{"fox", tabfox::make_fox_optimizer(bench_pop)},
             {"random_search", tabfox::make_random_search_optimizer()}},
            seeds, budget, bench_dim);
        write_file(bench_output, tabfox::comparison_to_csv(rows));
        std::cout << tabfox::comparison_to_text(rows);
        std::cout << "budget " << budget << " evaluations per run, " << seeds.size()
                  << " seeds; table written to " << bench_output << "\n";
    });

    // ---- run ------------------------------------------------------------
    auto* run = app.add_subcommand("run", "full pipeline: rank, normalize, fit, tune, "
                                          "evaluate, explain");
    std::string run_config, run_input, run_output_dir;
    std::optional<std::uint64_t> run_seed;
    bool run_no_tune = false;
    run->add_option("--config", run_config, "pipeline config JSON");
    run->add_option("--input", run_input, "input CSV (overrides config)");
    run->add_option("--output-dir", run_output_dir, "output directory (overrides config)");
    run->add_option("--seed", run_seed, "master seed (overrides config)");
    run->add_flag("--no-tune", run_no_tune, "skip FOX tuning");
    run->callback([&] {
        tabfox::PipelineConfig cfg;
        if (!run_config.empty()) cfg = tabfox::pipeline_config_from_json(read_json_file(run_config));
        if (!run_input.empty()) cfg.input = run_input;
        if (!run_output_dir.empty()) cfg.output_dir = run_output_dir;
        if (run_seed) cfg.seed = *run_seed;
        if (run_no_tune) cfg.tuning = false;
        tabfox::PipelineResult result = tabfox::run_pipeline(cfg);
        std::cout << tabfox::comparison_table_text(result.comparison);
        std::cout << "best model: " << result.best_model << "\n";
        std::cout << "bundle written to " << cfg.output_dir << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        std::cerr << "run '" << (argc > 0 ? argv[0] : "tabfox") << " --help' for usage\n";
        return 2;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run_app(argc, argv);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
