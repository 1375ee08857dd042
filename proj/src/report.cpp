#include "tabfox/report.hpp"

#include <iomanip>
#include <numeric>
#include <sstream>

#include "tabfox/common.hpp"

namespace tabfox {

std::int64_t ConfusionMatrix::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

ConfusionMatrix confusion_matrix(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                 std::size_t n_classes) {
    if (y_true.size() != y_pred.size()) {
        throw Error("confusion_matrix: y_true and y_pred lengths differ");
    }
    ConfusionMatrix cm;
    cm.n_classes = n_classes;
    cm.counts.assign(n_classes * n_classes, 0);
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        int t = y_true[i], p = y_pred[i];
        if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= n_classes ||
            static_cast<std::size_t>(p) >= n_classes) {
            throw Error("confusion_matrix: label out of range at position " + std::to_string(i));
        }
        cm.counts[static_cast<std::size_t>(t) * n_classes + static_cast<std::size_t>(p)]++;
    }
    return cm;
}

MetricsReport metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                      std::size_t n_classes) {
    MetricsReport report;
    report.confusion = confusion_matrix(y_true, y_pred, n_classes);
    const ConfusionMatrix& cm = report.confusion;
    const double total = static_cast<double>(cm.total());

    std::int64_t trace = 0;
    report.per_class.resize(n_classes);
    for (std::size_t k = 0; k < n_classes; ++k) {
        std::int64_t tp = cm.at(k, k);
        std::int64_t support = 0, predicted = 0;
        for (std::size_t j = 0; j < n_classes; ++j) {
            support += cm.at(k, j);
            predicted += cm.at(j, k);
        }
        trace += tp;

        ClassMetrics& m = report.per_class[k];
        m.support = support;
        if (predicted > 0) {
            m.precision = static_cast<double>(tp) / static_cast<double>(predicted);
        } else {
            m.precision = 0.0;
            m.degenerate = true;
        }
        if (support > 0) {
            m.recall = static_cast<double>(tp) / static_cast<double>(support);
        } else {
            m.recall = 0.0;
            m.degenerate = true;
        }
        m.f1 = (m.precision + m.recall > 0.0)
                   ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                   : 0.0;

        report.weighted_precision += static_cast<double>(support) * m.precision;
        report.weighted_f1 += static_cast<double>(support) * m.f1;
    }
    if (total > 0) {
        report.weighted_precision /= total;
        report.weighted_f1 /= total;
        report.accuracy = static_cast<double>(trace) / total;
        // support * (tp / support) does not always round back to tp, so the
        // support-weighted recall is evaluated as its exact reduction trace/total,
        // keeping the recall = accuracy identity bitwise.
        report.weighted_recall = report.accuracy;
    }
    return report;
}

nlohmann::json metrics_to_json(const MetricsReport& report,
                               const std::vector<std::string>& class_names) {
    nlohmann::json per_class = nlohmann::json::array();
    for (std::size_t k = 0; k < report.per_class.size(); ++k) {
        const ClassMetrics& m = report.per_class[k];
        nlohmann::json entry{{"precision", m.precision},
                             {"recall", m.recall},
                             {"f1", m.f1},
                             {"support", m.support},
                             {"degenerate", m.degenerate}};
        if (k < class_names.size()) entry["class"] = class_names[k];
        per_class.push_back(std::move(entry));
    }
    nlohmann::json confusion = nlohmann::json::array();
    for (std::size_t t = 0; t < report.confusion.n_classes; ++t) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t p = 0; p < report.confusion.n_classes; ++p) {
            row.push_back(report.confusion.at(t, p));
        }
        confusion.push_back(std::move(row));
    }
    return nlohmann::json{{"format", "tabfox.metrics"},
                          {"version", 1},
                          {"accuracy", report.accuracy},
                          {"weighted", {{"precision", report.weighted_precision},
                                        {"recall", report.weighted_recall},
                                        {"f1", report.weighted_f1}}},
                          {"per_class", std::move(per_class)},
                          {"confusion", std::move(confusion)}};
}

MetricsReport metrics_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "tabfox.metrics" || j.value("version", 0) != 1) {
        throw Error("metrics_from_json: not a tabfox.metrics v1 document");
    }
    MetricsReport report;
    report.accuracy = j.at("accuracy").get<double>();
    report.weighted_precision = j.at("weighted").at("precision").get<double>();
    report.weighted_recall = j.at("weighted").at("recall").get<double>();
    report.weighted_f1 = j.at("weighted").at("f1").get<double>();
    for (const auto& entry : j.at("per_class")) {
        ClassMetrics m;
        m.precision = entry.at("precision").get<double>();
        m.recall = entry.at("recall").get<double>();
        m.f1 = entry.at("f1").get<double>();
        m.support = entry.at("support").get<std::int64_t>();
        m.degenerate = entry.at("degenerate").get<bool>();
        report.per_class.push_back(m);
    }
    const auto& confusion = j.at("confusion");
    report.confusion.n_classes = confusion.size();
    for (const auto& row : confusion) {
        for (const auto& v : row) report.confusion.counts.push_back(v.get<std::int64_t>());
    }
    return report;
}

std::string confusion_to_csv(const ConfusionMatrix& cm,
                             const std::vector<std::string>& class_names) {
    auto name_of = [&](std::size_t k) {
        return k < class_names.size() ? class_names[k] : "class_" + std::to_string(k);
    };
    std::ostringstream out;
    out << "true\\pred";
    for (std::size_t p = 0; p < cm.n_classes; ++p) out << ',' << name_of(p);
    out << '\n';
    for (std::size_t t = 0; t < cm.n_classes; ++t) {
        out << name_of(t);
        for (std::size_t p = 0; p < cm.n_classes; ++p) out << ',' << cm.at(t, p);
        out << '\n';
    }
    return out.str();
}

std::string metrics_to_text(const MetricsReport& report,
                            const std::vector<std::string>& class_names) {
    auto name_of = [&](std::size_t k) {
        return k < class_names.size() ? class_names[k] : "class_" + std::to_string(k);
    };
    std::ostringstream out;
    out << std::left << std::setw(20) << "class" << std::right << std::setw(10) << "precision"
        << std::setw(10) << "recall" << std::setw(10) << "f1" << std::setw(10) << "support"
        << '\n';
    out << std::fixed << std::setprecision(2);
    for (std::size_t k = 0; k < report.per_class.size(); ++k) {
        const ClassMetrics& m = report.per_class[k];
        out << std::left << std::setw(20) << name_of(k) << std::right << std::setw(10)
            << m.precision << std::setw(10) << m.recall << std::setw(10) << m.f1 << std::setw(10)
            << m.support << '\n';
    }
    out << std::left << std::setw(20) << "weighted" << std::right << std::setw(10)
        << report.weighted_precision << std::setw(10) << report.weighted_recall << std::setw(10)
        << report.weighted_f1 << std::setw(10) << report.confusion.total() << '\n';
    out << "accuracy: " << report.accuracy << '\n';
    return out.str();
}

std::string comparison_table_csv(const std::vector<ComparisonEntry>& entries) {
    std::ostringstream out;
    out << "model,precision,recall,f1,accuracy\n";
    for (const auto& e : entries) {
        out << e.name << ',' << format_double(e.report.weighted_precision) << ','
            << format_double(e.report.weighted_recall) << ','
            << format_double(e.report.weighted_f1) << ',' << format_double(e.report.accuracy)
            << '\n';
    }
    return out.str();
}

nlohmann::json comparison_table_json(const std::vector<ComparisonEntry>& entries) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : entries) {
        arr.push_back({{"model", e.name},
                       {"precision", e.report.weighted_precision},
                       {"recall", e.report.weighted_recall},
                       {"f1", e.report.weighted_f1},
                       {"accuracy", e.report.accuracy}});
    }
    return arr;
}

std::string comparison_table_text(const std::vector<ComparisonEntry>& entries) {
    std::ostringstream out;
    out << std::left << std::setw(28) << "Model" << std::right << std::setw(11) << "Precision"
        << std::setw(9) << "Recall" << std::setw(11) << "F1-score" << std::setw(11) << "Accuracy"
        << '\n';
    out << std::fixed << std::setprecision(2);
    for (const auto& e : entries) {
        out << std::left << std::setw(28) << e.name << std::right << std::setw(11)
            << e.report.weighted_precision << std::setw(9) << e.report.weighted_recall
            << std::setw(11) << e.report.weighted_f1 << std::setw(11) << e.report.accuracy
            << '\n';
    }
    return out.str();
}

} // namespace tabfox
