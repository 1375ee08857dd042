#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tabfox/common.hpp"
#include "tabfox/data.hpp"
#include "tabfox/explain.hpp"
#include "tabfox/forest.hpp"
#include "tabfox/foxopt.hpp"
#include "tabfox/gbt.hpp"
#include "tabfox/pipeline.hpp"
#include "tabfox/preprocess.hpp"
#include "tabfox/report.hpp"
#include "tabfox/synthetic.hpp"
#include "tabfox/tune.hpp"

namespace py = pybind11;
using namespace tabfox;

namespace {

std::vector<double> row_of(const Dataset& ds, std::size_t r) {
    auto row = ds.row(r);
    return {row.begin(), row.end()};
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "tabular ML pipeline: Gini feature ranking, random forest and "
              "boosted-tree classifiers, FOX hyperparameter tuning, exact "
              "Shapley explanations";

    py::register_exception<Error>(m, "TabfoxError");

    // ---- data ------------------------------------------------------------
    py::class_<Dataset>(m, "Dataset")
        .def(py::init<>())
        .def_readwrite("values", &Dataset::values)
        .def_readwrite("labels", &Dataset::labels)
        .def_readwrite("feature_names", &Dataset::feature_names)
        .def_readwrite("class_names", &Dataset::class_names)
        .def_property_readonly("n_rows", &Dataset::n_rows)
        .def_property_readonly("n_features", &Dataset::n_features)
        .def_property_readonly("n_classes", &Dataset::n_classes)
        .def("row", &row_of)
        .def("validate", &Dataset::validate)
        .def("__eq__", [](const Dataset& a, const Dataset& b) { return a == b; });

    py::class_<SplitSpec>(m, "SplitSpec")
        .def(py::init<>())
        .def_readwrite("test_fraction", &SplitSpec::test_fraction)
        .def_readwrite("seed", &SplitSpec::seed)
        .def_readwrite("stratified", &SplitSpec::stratified);

    m.def("load_csv", &load_csv, py::arg("path"), py::arg("label_column"));
    m.def("save_csv", &save_csv, py::arg("dataset"), py::arg("path"),
          py::arg("label_column") = "label");
    m.def("split", &split, py::arg("dataset"), py::arg("spec"));
    m.def("class_distribution", &class_distribution);
    m.def("make_synthetic", &make_synthetic, py::arg("n_rows") = 75, py::arg("n_features") = 12,
          py::arg("seed") = 7);

    // ---- preprocess --------------------------------------------------------
    py::enum_<NormalizerKind>(m, "NormalizerKind")
        .value("zscore", NormalizerKind::ZScore)
        .value("minmax", NormalizerKind::MinMax);

    py::class_<GiniRanking>(m, "GiniRanking")
        .def_readonly("scores", &GiniRanking::scores)
        .def_readonly("order", &GiniRanking::order);

    py::class_<NormalizerParams>(m, "NormalizerParams")
        .def_readonly("kind", &NormalizerParams::kind)
        .def_readonly("a", &NormalizerParams::a)
        .def_readonly("b", &NormalizerParams::b);

    m.def("gini_impurity", &gini_impurity);
    m.def("importance_forest_defaults", &importance_forest_defaults);
    m.def("rank_features_gini", &rank_features_gini, py::arg("train"), py::arg("config"),
          py::arg("seed"), py::call_guard<py::gil_scoped_release>());
    m.def("select_top_k", &select_top_k, py::arg("dataset"), py::arg("ranking"), py::arg("k"));
    m.def("fit_normalizer", &fit_normalizer, py::arg("train"), py::arg("kind"));
    m.def("apply_normalizer", &apply_normalizer, py::arg("dataset"), py::arg("params"));

    // ---- forest ------------------------------------------------------------
    py::class_<ForestConfig>(m, "ForestConfig")
        .def(py::init<>())
        .def_readwrite("n_trees", &ForestConfig::n_trees)
        .def_readwrite("max_depth", &ForestConfig::max_depth)
        .def_readwrite("min_samples_leaf", &ForestConfig::min_samples_leaf)
        .def_readwrite("max_features_fraction", &ForestConfig::max_features_fraction)
        .def_readwrite("bootstrap", &ForestConfig::bootstrap)
        .def_readwrite("seed", &ForestConfig::seed);

    py::class_<ForestModel>(m, "ForestModel")
        .def_readonly("config", &ForestModel::config)
        .def_property_readonly("n_trees",
                               [](const ForestModel& f) { return f.trees.size(); })
        .def_readonly("n_classes", &ForestModel::n_classes)
        .def_readonly("n_features", &ForestModel::n_features);

    m.def("fit_forest", &fit_forest, py::arg("train"), py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
    m.def("forest_predict_proba",
          [](const ForestModel& model, const std::vector<double>& row) {
              return predict_proba(model, row);
          });
    m.def("forest_predict",
          [](const ForestModel& model, const Dataset& ds) { return predict(model, ds); });
    m.def("save_forest", &save_forest);
    m.def("load_forest", &load_forest);

    // ---- gbt ---------------------------------------------------------------
    py::class_<GbtConfig>(m, "GbtConfig")
        .def(py::init<>())
        .def_readwrite("n_rounds", &GbtConfig::n_rounds)
        .def_readwrite("learning_rate", &GbtConfig::learning_rate)
        .def_readwrite("max_depth", &GbtConfig::max_depth)
        .def_readwrite("min_child_weight", &GbtConfig::min_child_weight)
        .def_readwrite("reg_lambda", &GbtConfig::reg_lambda)
        .def_readwrite("gamma", &GbtConfig::gamma)
        .def_readwrite("subsample", &GbtConfig::subsample)
        .def_readwrite("colsample", &GbtConfig::colsample)
        .def_readwrite("seed", &GbtConfig::seed);

    py::class_<GbtModel>(m, "GbtModel")
        .def_readonly("base_score", &GbtModel::base_score)
        .def_readonly("config", &GbtModel::config)
        .def_readonly("n_classes", &GbtModel::n_classes)
        .def_readonly("n_features", &GbtModel::n_features);

    m.def("softmax_gradients",
          [](const std::vector<double>& logits, int true_class) {
              return softmax_gradients(logits, true_class);
          });
    m.def("split_gain", &split_gain, py::arg("g_left"), py::arg("h_left"), py::arg("g_right"),
          py::arg("h_right"), py::arg("reg_lambda"), py::arg("gamma"));
    m.def(
        "fit_gbt",
        [](const Dataset& train, const GbtConfig& cfg) { return fit_gbt(train, cfg); },
        py::arg("train"), py::arg("config"), py::call_guard<py::gil_scoped_release>());
    m.def("gbt_predict_proba", [](const GbtModel& model, const std::vector<double>& row) {
        return predict_proba(model, row);
    });
    m.def("gbt_predict_logits", [](const GbtModel& model, const std::vector<double>& row) {
        return predict_logits(model, row);
    });
    m.def("gbt_predict",
          [](const GbtModel& model, const Dataset& ds) { return predict(model, ds); });
    m.def("save_gbt", &save_gbt);
    m.def("load_gbt", &load_gbt);

    // ---- foxopt ------------------------------------------------------------
    py::class_<Bounds>(m, "Bounds")
        .def(py::init<>())
        .def(py::init([](std::vector<double> lower, std::vector<double> upper) {
                 return Bounds{std::move(lower), std::move(upper)};
             }),
             py::arg("lower"), py::arg("upper"))
        .def_readwrite("lower", &Bounds::lower)
        .def_readwrite("upper", &Bounds::upper);

    py::class_<FoxConfig>(m, "FoxConfig")
        .def(py::init<>())
        .def_readwrite("pop_size", &FoxConfig::pop_size)
        .def_readwrite("max_iters", &FoxConfig::max_iters)
        .def_readwrite("seed", &FoxConfig::seed)
        .def_readwrite("c1", &FoxConfig::c1)
        .def_readwrite("c2", &FoxConfig::c2);

    py::class_<OptResult>(m, "OptResult")
        .def_readonly("best_x", &OptResult::best_x)
        .def_readonly("best_fitness", &OptResult::best_fitness)
        .def_readonly("history", &OptResult::history)
        .def_readonly("evaluations", &OptResult::evaluations);

    // objective may be a Python callable, so the GIL stays held
    m.def("fox_optimize", &fox_optimize, py::arg("objective"), py::arg("bounds"),
          py::arg("config"), py::arg("initial") = std::vector<std::vector<double>>{});
    m.def("random_search", &random_search, py::arg("objective"), py::arg("bounds"),
          py::arg("budget"), py::arg("seed"));

    py::class_<BenchmarkProblem>(m, "BenchmarkProblem")
        .def_readonly("name", &BenchmarkProblem::name)
        .def_readonly("objective", &BenchmarkProblem::objective)
        .def_readonly("bounds", &BenchmarkProblem::bounds)
        .def_readonly("known_optimum", &BenchmarkProblem::known_optimum);

    m.def("benchmark", &benchmark, py::arg("name"), py::arg("dim"));
    m.def("benchmark_names", &benchmark_names);

    // ---- tune --------------------------------------------------------------
    py::enum_<ModelKind>(m, "ModelKind")
        .value("forest", ModelKind::Forest)
        .value("gbt", ModelKind::Gbt);

    py::enum_<ParamKind>(m, "ParamKind")
        .value("integer", ParamKind::Integer)
        .value("real", ParamKind::Real)
        .value("log_real", ParamKind::LogReal);

    py::class_<ParamSpec>(m, "ParamSpec")
        .def(py::init([](std::string name, ParamKind kind, double lo, double hi) {
                 return ParamSpec{std::move(name), kind, lo, hi};
             }),
             py::arg("name"), py::arg("kind"), py::arg("lo"), py::arg("hi"))
        .def_readwrite("name", &ParamSpec::name)
        .def_readwrite("kind", &ParamSpec::kind)
        .def_readwrite("lo", &ParamSpec::lo)
        .def_readwrite("hi", &ParamSpec::hi);

    py::class_<SearchSpace>(m, "SearchSpace")
        .def(py::init<>())
        .def_readwrite("model_kind", &SearchSpace::model_kind)
        .def_readwrite("params", &SearchSpace::params)
        .def_property_readonly("dim", &SearchSpace::dim);

    py::class_<TuneResult>(m, "TuneResult")
        .def_readonly("model_kind", &TuneResult::model_kind)
        .def_readonly("best_params", &TuneResult::best_params)
        .def_readonly("best_cv_score", &TuneResult::best_cv_score)
        .def_readonly("baseline_cv_score", &TuneResult::baseline_cv_score)
        .def_readonly("trace", &TuneResult::trace);

    py::enum_<TuneMetric>(m, "TuneMetric")
        .value("accuracy", TuneMetric::Accuracy)
        .value("weighted_f1", TuneMetric::WeightedF1);

    m.def("default_forest_space", &default_forest_space);
    m.def("default_gbt_space", &default_gbt_space);
    m.def("decode", &decode, py::arg("x"), py::arg("space"));
    m.def("encode", &encode, py::arg("params"), py::arg("space"));
    m.def("cv_objective", &cv_objective, py::arg("train"), py::arg("space"), py::arg("folds"),
          py::arg("seed"), py::arg("metric") = TuneMetric::Accuracy);
    m.def("tune", &tune, py::arg("train"), py::arg("space"), py::arg("fox_config"),
          py::arg("folds"), py::arg("seed"), py::arg("metric") = TuneMetric::Accuracy,
          py::call_guard<py::gil_scoped_release>());

    // ---- explain -------------------------------------------------------------
    py::class_<ExplainOptions>(m, "ExplainOptions")
        .def(py::init<>())
        .def_readwrite("max_features_exact", &ExplainOptions::max_features_exact)
        .def_readwrite("allow_sampling", &ExplainOptions::allow_sampling)
        .def_readwrite("n_permutations", &ExplainOptions::n_permutations)
        .def_readwrite("seed", &ExplainOptions::seed);

    py::class_<Explanation>(m, "Explanation")
        .def_readonly("base_value", &Explanation::base_value)
        .def_readonly("contributions", &Explanation::contributions)
        .def_readonly("predicted_output", &Explanation::predicted_output)
        .def_readonly("exact", &Explanation::exact)
        .def_readonly("n_permutations", &Explanation::n_permutations);

    py::class_<SummaryRanking>(m, "SummaryRanking")
        .def_readonly("values", &SummaryRanking::values)
        .def_readonly("order", &SummaryRanking::order);

    m.def("forest_expected_value_subset",
          [](const ForestModel& model, const std::vector<double>& row,
             const std::vector<std::size_t>& known) {
              return expected_value_subset(model, row, known);
          });
    m.def("gbt_expected_value_subset",
          [](const GbtModel& model, const std::vector<double>& row,
             const std::vector<std::size_t>& known) {
              return expected_value_subset(model, row, known);
          });
    m.def(
        "forest_shapley_values",
        [](const ForestModel& model, const std::vector<double>& row, const ExplainOptions& opts) {
            return shapley_values(model, row, opts);
        },
        py::arg("model"), py::arg("row"), py::arg("options") = ExplainOptions{},
        py::call_guard<py::gil_scoped_release>());
    m.def(
        "gbt_shapley_values",
        [](const GbtModel& model, const std::vector<double>& row, const ExplainOptions& opts) {
            return shapley_values(model, row, opts);
        },
        py::arg("model"), py::arg("row"), py::arg("options") = ExplainOptions{},
        py::call_guard<py::gil_scoped_release>());
    m.def("summary_ranking", &summary_ranking);

    // ---- report ----------------------------------------------------------------
    py::class_<ConfusionMatrix>(m, "ConfusionMatrix")
        .def_readonly("n_classes", &ConfusionMatrix::n_classes)
        .def_readonly("counts", &ConfusionMatrix::counts)
        .def("at", &ConfusionMatrix::at)
        .def("total", &ConfusionMatrix::total);

    py::class_<ClassMetrics>(m, "ClassMetrics")
        .def_readonly("precision", &ClassMetrics::precision)
        .def_readonly("recall", &ClassMetrics::recall)
        .def_readonly("f1", &ClassMetrics::f1)
        .def_readonly("support", &ClassMetrics::support)
        .def_readonly("degenerate", &ClassMetrics::degenerate);

    py::class_<MetricsReport>(m, "MetricsReport")
        .def_readonly("per_class", &MetricsReport::per_class)
        .def_readonly("weighted_precision", &MetricsReport::weighted_precision)
        .def_readonly("weighted_recall", &MetricsReport::weighted_recall)
        .def_readonly("weighted_f1", &MetricsReport::weighted_f1)
        .def_readonly("accuracy", &MetricsReport::accuracy)
        .def_readonly("confusion", &MetricsReport::confusion);

    m.def("confusion_matrix", &confusion_matrix, py::arg("y_true"), py::arg("y_pred"),
          py::arg("n_classes"));
    m.def("metrics", &metrics, py::arg("y_true"), py::arg("y_pred"), py::arg("n_classes"));
    m.def("metrics_to_text", &metrics_to_text, py::arg("report"),
          py::arg("class_names") = std::vector<std::string>{});

    // ---- pipeline -----------------------------------------------------------------
    py::enum_<LeakageMode>(m, "LeakageMode")
        .value("safe", LeakageMode::Safe)
        .value("paper_order", LeakageMode::PaperOrder);

    py::class_<PipelineConfig>(m, "PipelineConfig")
        .def(py::init<>())
        .def_readwrite("input", &PipelineConfig::input)
        .def_readwrite("label_column", &PipelineConfig::label_column)
        .def_readwrite("top_k", &PipelineConfig::top_k)
        .def_readwrite("normalizer", &PipelineConfig::normalizer)
        .def_readwrite("test_fraction", &PipelineConfig::test_fraction)
        .def_readwrite("stratified", &PipelineConfig::stratified)
        .def_readwrite("seed", &PipelineConfig::seed)
        .def_readwrite("run_forest", &PipelineConfig::run_forest)
        .def_readwrite("run_gbt", &PipelineConfig::run_gbt)
        .def_readwrite("tuning", &PipelineConfig::tuning)
        .def_readwrite("fox_pop_size", &PipelineConfig::fox_pop_size)
        .def_readwrite("fox_max_iters", &PipelineConfig::fox_max_iters)
        .def_readwrite("folds", &PipelineConfig::folds)
        .def_readwrite("leakage", &PipelineConfig::leakage)
        .def_readwrite("explain_max_exact", &PipelineConfig::explain_max_exact)
        .def_readwrite("explain_permutations", &PipelineConfig::explain_permutations)
        .def_readwrite("output_dir", &PipelineConfig::output_dir)
        .def_readwrite("synth_rows", &PipelineConfig::synth_rows)
        .def_readwrite("synth_features", &PipelineConfig::synth_features);

    py::class_<PipelineResult>(m, "PipelineResult")
        .def_readonly("best_model", &PipelineResult::best_model)
        .def_property_readonly("manifest",
                               [](const PipelineResult& r) { return r.manifest.dump(); });

    m.def("run_pipeline", &run_pipeline, py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
}
