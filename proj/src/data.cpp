#include "tabfox/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "tabfox/common.hpp"
#include "tabfox/rng.hpp"

namespace tabfox {

namespace {

// One CSV record; handles quoted fields with embedded commas, doubled quotes
// and newlines. Returns false at end of input.
bool read_record(std::istream& in, char sep, std::vector<std::string>& out, std::size_t& line_no) {
    out.clear();
    int c = in.get();
    if (c == EOF) return false;
    std::string field;
    bool quoted = false;
    bool any = false;
    while (true) {
        if (c == EOF) {
            out.push_back(field);
            return true;
        }
        char ch = static_cast<char>(c);
        if (quoted) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    field.push_back('"');
                    in.get();
                } else {
                    quoted = false;
                }
            } else {
                if (ch == '\n') ++line_no;
                field.push_back(ch);
            }
        } else if (ch == '"' && field.empty() && !any) {
            quoted = true;
            any = true;
        } else if (ch == sep) {
            out.push_back(std::move(field));
            field.clear();
            any = false;
        } else if (ch == '\n') {
            ++line_no;
            if (!field.empty() && field.back() == '\r') field.pop_back();
            out.push_back(std::move(field));
            return true;
        } else {
            field.push_back(ch);
            any = true;
        }
        c = in.get();
    }
}

std::size_t round_half_up(double x) {
    return static_cast<std::size_t>(std::floor(x + 0.5));
}

bool needs_quoting(const std::string& s) {
    return s.find_first_of(",\"\n\r") != std::string::npos;
}

std::string quote_field(const std::string& s) {
    if (!needs_quoting(s)) return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"') q += "\"\"";
        else q.push_back(ch);
    }
    q.push_back('"');
    return q;
}

} // namespace

void Dataset::validate() const {
    if (values.size() != n_rows() * n_features()) {
        throw Error("dataset: value matrix shape does not match rows x features");
    }
    std::unordered_set<std::string> seen;
    for (const auto& name : feature_names) {
        if (name.empty()) throw Error("dataset: empty feature name");
        if (!seen.insert(name).second) throw Error("dataset: duplicate feature name '" + name + "'");
    }
    seen.clear();
    for (const auto& name : class_names) {
        if (!seen.insert(name).second) throw Error("dataset: duplicate class name '" + name + "'");
    }
    for (double v : values) {
        if (!std::isfinite(v)) throw Error("dataset: non-finite feature value");
    }
    for (int y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= n_classes()) {
            throw Error("dataset: label " + std::to_string(y) + " out of range");
        }
    }
}

Dataset load_csv(const std::string& path, const std::string& label_column) {
    std::ifstream in(path, std::ios::binary);
    if (!in.is_open()) throw Error("load_csv: cannot open '" + path + "'");

    // strip a UTF-8 BOM if present
    if (in.peek() == 0xEF) {
        char bom[3];
        in.read(bom, 3);
        if (in.gcount() != 3 || bom[1] != char(0xBB) || bom[2] != char(0xBF)) {
            throw Error("load_csv: malformed byte-order mark in '" + path + "'");
        }
    }

    std::size_t line_no = 1;
    std::vector<std::string> header;
    if (!read_record(in, ',', header, line_no) || header.empty()) {
        throw Error("load_csv: missing header row in '" + path + "'");
    }

    std::size_t label_col = header.size();
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == label_column) {
            label_col = i;
            break;
        }
    }
    if (label_col == header.size()) {
        throw Error("load_csv: label column '" + label_column + "' not found in header");
    }

    Dataset ds;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i != label_col) ds.feature_names.push_back(header[i]);
    }
    {
        std::unordered_set<std::string> seen;
        for (const auto& name : ds.feature_names) {
            if (name.empty()) throw Error("load_csv: empty feature name in header");
            if (!seen.insert(name).second) {
                throw Error("load_csv: duplicate feature name '" + name + "'");
            }
        }
    }

    std::unordered_map<std::string, int> class_index;
    std::vector<std::string> record;
    while (true) {
        std::size_t record_line = line_no; // header consumed line 1
        if (!read_record(in, ',', record, line_no)) break;
        if (record.size() == 1 && record[0].empty()) continue; // trailing blank line
        if (record.size() != header.size()) {
            throw Error("load_csv: line " + std::to_string(record_line) + " has " +
                        std::to_string(record.size()) + " fields, expected " +
                        std::to_string(header.size()));
        }
        std::size_t fi = 0;
        for (std::size_t i = 0; i < record.size(); ++i) {
            if (i == label_col) continue;
            double v = 0.0;
            if (!parse_finite_double(record[i], v)) {
                throw Error("load_csv: non-numeric or non-finite value '" + record[i] +
                            "' at line " + std::to_string(record_line) + ", column '" +
                            header[i] + "'");
            }
            ds.values.push_back(v);
            ++fi;
        }
        (void)fi;
        const std::string& label = record[label_col];
        auto [it, inserted] = class_index.try_emplace(label, static_cast<int>(ds.class_names.size()));
        if (inserted) ds.class_names.push_back(label);
        ds.labels.push_back(it->second);
    }

    if (ds.labels.empty()) throw Error("load_csv: no data rows in '" + path + "'");
    ds.validate();
    return ds;
}

void save_csv(const Dataset& ds, const std::string& path, const std::string& label_column) {
    std::ofstream out(path, std::ios::binary);
    if (!out.is_open()) throw Error("save_csv: cannot open '" + path + "' for writing");
    for (const auto& name : ds.feature_names) out << quote_field(name) << ',';
    out << quote_field(label_column) << '\n';
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
        for (std::size_t c = 0; c < ds.n_features(); ++c) {
            out << format_double(ds.at(r, c)) << ',';
        }
        out << quote_field(ds.class_names[static_cast<std::size_t>(ds.labels[r])]) << '\n';
    }
    if (!out) throw Error("save_csv: write to '" + path + "' failed");
}

nlohmann::json dataset_to_json(const Dataset& ds) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t c = 0; c < ds.n_features(); ++c) row.push_back(ds.at(r, c));
        rows.push_back(std::move(row));
    }
    return nlohmann::json{{"feature_names", ds.feature_names},
                          {"class_names", ds.class_names},
                          {"rows", std::move(rows)},
                          {"labels", ds.labels}};
}

Dataset dataset_from_json(const nlohmann::json& j) {
    Dataset ds;
    ds.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    ds.class_names = j.at("class_names").get<std::vector<std::string>>();
    ds.labels = j.at("labels").get<std::vector<int>>();
    const auto& rows = j.at("rows");
    for (const auto& row : rows) {
        if (row.size() != ds.feature_names.size()) {
            throw Error("dataset_from_json: row width does not match feature_names");
        }
        for (const auto& v : row) ds.values.push_back(v.get<double>());
    }
    if (rows.size() != ds.labels.size()) {
        throw Error("dataset_from_json: rows and labels disagree on length");
    }
    ds.validate();
    return ds;
}

Dataset take_rows(const Dataset& ds, const std::vector<std::size_t>& rows) {
    Dataset out;
    out.feature_names = ds.feature_names;
    out.class_names = ds.class_names;
    out.values.reserve(rows.size() * ds.n_features());
    out.labels.reserve(rows.size());
    for (std::size_t r : rows) {
        auto row = ds.row(r);
        out.values.insert(out.values.end(), row.begin(), row.end());
        out.labels.push_back(ds.labels[r]);
    }
    return out;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
    if (ds.n_rows() < 2) throw Error("split: dataset needs at least 2 rows");
    if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0)) {
        throw Error("split: test_fraction must be strictly between 0 and 1");
    }

    const std::size_t n = ds.n_rows();
    std::vector<std::size_t> test_idx;
    Rng rng(derive_seed(spec.seed, {0x5u}));

    if (spec.stratified) {
        std::vector<std::vector<std::size_t>> by_class(ds.n_classes());
        for (std::size_t r = 0; r < n; ++r) {
            by_class[static_cast<std::size_t>(ds.labels[r])].push_back(r);
        }
        for (auto& members : by_class) {
            if (members.size() < 2) continue; // singleton classes go to train
            std::size_t t = round_half_up(spec.test_fraction * static_cast<double>(members.size()));
            if (t >= members.size()) t = members.size() - 1; // keep one in train
            rng.shuffle(members);
            test_idx.insert(test_idx.end(), members.begin(), members.begin() + t);
        }
    } else {
        std::size_t t = round_half_up(spec.test_fraction * static_cast<double>(n));
        if (t >= n) t = n - 1;
        auto perm = rng.permutation(n);
        test_idx.assign(perm.begin(), perm.begin() + t);
    }

    std::sort(test_idx.begin(), test_idx.end());
    std::vector<std::size_t> train_idx;
    train_idx.reserve(n - test_idx.size());
    std::size_t ti = 0;
    for (std::size_t r = 0; r < n; ++r) {
        if (ti < test_idx.size() && test_idx[ti] == r) {
            ++ti;
        } else {
            train_idx.push_back(r);
        }
    }
    return {take_rows(ds, train_idx), take_rows(ds, test_idx)};
}

std::vector<std::size_t> class_distribution(const Dataset& ds) {
    std::vector<std::size_t> counts(ds.n_classes(), 0);
    for (int y : ds.labels) counts[static_cast<std::size_t>(y)]++;
    return counts;
}

} // namespace tabfox
