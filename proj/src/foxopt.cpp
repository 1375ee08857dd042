#include "tabfox/foxopt.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "tabfox/common.hpp"
#include "tabfox/rng.hpp"

namespace tabfox {

namespace {

std::string position_to_string(const std::vector<double>& x) {
    std::ostringstream out;
    out << '[';
    for (std::size_t d = 0; d < x.size(); ++d) {
        if (d) out << ", ";
        out << format_double(x[d]);
        if (d >= 7 && x.size() > 8) {
            out << ", ...";
            break;
        }
    }
    out << ']';
    return out.str();
}

double evaluate_checked(const Objective& f, const std::vector<double>& x) {
    double v = f(x);
    if (!std::isfinite(v)) {
        throw Error("objective returned a non-finite value at " + position_to_string(x));
    }
    return v;
}

void clamp_to_bounds(std::vector<double>& x, const Bounds& bounds) {
    for (std::size_t d = 0; d < x.size(); ++d) {
        x[d] = std::clamp(x[d], bounds.lower[d], bounds.upper[d]);
    }
}

// Linear-interpolation quantile on a sorted vector.
double quantile(const std::vector<double>& sorted, double q) {
    if (sorted.size() == 1) return sorted.front();
    double pos = q * static_cast<double>(sorted.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

} // namespace

void Bounds::validate() const {
    if (lower.size() != upper.size() || lower.empty()) {
        throw Error("bounds: lower and upper must be non-empty and equal length");
    }
    for (std::size_t d = 0; d < lower.size(); ++d) {
        if (!(lower[d] < upper[d])) {
            throw Error("bounds: lower must be strictly below upper in every dimension");
        }
        if (!std::isfinite(lower[d]) || !std::isfinite(upper[d])) {
            throw Error("bounds: non-finite bound");
        }
    }
}

bool Bounds::contains(const std::vector<double>& x) const {
    if (x.size() != dim()) return false;
    for (std::size_t d = 0; d < x.size(); ++d) {
        if (x[d] < lower[d] || x[d] > upper[d]) return false;
    }
    return true;
}

OptResult fox_optimize(const Objective& f, const Bounds& bounds, const FoxConfig& cfg,
                       const std::vector<std::vector<double>>& initial) {
    bounds.validate();
    if (cfg.pop_size < 2) throw Error("fox_optimize: pop_size must be >= 2");
    if (cfg.max_iters < 1) throw Error("fox_optimize: max_iters must be >= 1");

    const std::size_t dim = bounds.dim();
    const std::size_t pop = static_cast<std::size_t>(cfg.pop_size);

    std::vector<std::vector<double>> positions(pop, std::vector<double>(dim));
    for (std::size_t i = 0; i < pop; ++i) {
        if (i < initial.size()) {
            if (initial[i].size() != dim) {
                throw Error("fox_optimize: initial position has wrong dimension");
            }
            positions[i] = initial[i];
            clamp_to_bounds(positions[i], bounds);
        } else {
            Rng rng(derive_seed(cfg.seed, {0xA0u, i}));
            for (std::size_t d = 0; d < dim; ++d) {
                positions[i][d] = rng.uniform(bounds.lower[d], bounds.upper[d]);
            }
        }
    }

    OptResult result;
    std::vector<double> fitness(pop);
    for (std::size_t i = 0; i < pop; ++i) fitness[i] = evaluate_checked(f, positions[i]);
    result.evaluations = pop;

    std::size_t best_idx = 0;
    for (std::size_t i = 1; i < pop; ++i) {
        if (fitness[i] < fitness[best_idx]) best_idx = i;
    }
    result.best_x = positions[best_idx];
    result.best_fitness = fitness[best_idx];
    result.history.push_back(result.best_fitness);

    double min_time = 1.0; // smallest mean(T)/2 seen so far across iterations

    for (int t = 0; t < cfg.max_iters; ++t) {
        const double a =
            2.0 * (1.0 - static_cast<double>(t) / static_cast<double>(cfg.max_iters));
        double iteration_min_time = min_time;

        for (std::size_t i = 0; i < pop; ++i) {
            Rng rng(derive_seed(cfg.seed, {0xA1u, static_cast<std::uint64_t>(t), i}));
            std::vector<double>& x = positions[i];
            if (rng.uniform() >= 0.5) {
                // Exploitation: a jump scaled by half the sound-travel distance,
                // which reduces to the best position itself (speed = best/T,
                // distance = speed * T).
                double mean_t = 0.0;
                for (std::size_t d = 0; d < dim; ++d) {
                    double time_d = rng.uniform();
                    mean_t += time_d;
                    x[d] = result.best_x[d] * 0.5;
                }
                mean_t /= static_cast<double>(dim);
                double jump = 0.5 * 9.81 * mean_t * mean_t;
                double scale = rng.uniform() < 0.18 ? cfg.c1 : cfg.c2;
                for (double& v : x) v *= jump * scale;
                iteration_min_time = std::min(iteration_min_time, mean_t / 2.0);
            } else {
                // Exploration: normal wander around the best, shrinking with
                // both the time memory and the iteration schedule.
                for (std::size_t d = 0; d < dim; ++d) {
                    x[d] = result.best_x[d] + rng.normal() * (min_time * a);
                }
            }
            clamp_to_bounds(x, bounds);
        }

        for (std::size_t i = 0; i < pop; ++i) {
            fitness[i] = evaluate_checked(f, positions[i]);
            if (fitness[i] < result.best_fitness) {
                result.best_fitness = fitness[i];
                result.best_x = positions[i];
            }
        }
        result.evaluations += pop;
        min_time = iteration_min_time;
        result.history.push_back(result.best_fitness);
    }
    return result;
}

OptResult random_search(const Objective& f, const Bounds& bounds, std::size_t budget,
                        std::uint64_t seed) {
    bounds.validate();
    if (budget < 1) throw Error("random_search: budget must be >= 1");

    Rng rng(derive_seed(seed, {0xA2u}));
    OptResult result;
    std::vector<double> x(bounds.dim());
    for (std::size_t i = 0; i < budget; ++i) {
        for (std::size_t d = 0; d < bounds.dim(); ++d) {
            x[d] = rng.uniform(bounds.lower[d], bounds.upper[d]);
        }
        double v = evaluate_checked(f, x);
        if (i == 0 || v < result.best_fitness) {
            result.best_fitness = v;
            result.best_x = x;
        }
        result.history.push_back(result.best_fitness);
    }
    result.evaluations = budget;
    return result;
}

namespace {

Bounds uniform_box(std::size_t dim, double lo, double hi) {
    return Bounds{std::vector<double>(dim, lo), std::vector<double>(dim, hi)};
}

} // namespace

BenchmarkProblem benchmark(const std::string& name, std::size_t dim) {
    if (dim == 0) throw Error("benchmark: dimension must be positive");
    using std::numbers::pi;

    if (name == "sphere") {
        return {name,
                [](const std::vector<double>& x) {
                    double s = 0.0;
                    for (double v : x) s += v * v;
                    return s;
                },
                uniform_box(dim, -100.0, 100.0), 0.0};
    }
    if (name == "rosenbrock") {
        return {name,
                [](const std::vector<double>& x) {
                    double s = 0.0;
                    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
                        double t1 = x[i + 1] - x[i] * x[i];
                        double t2 = 1.0 - x[i];
                        s += 100.0 * t1 * t1 + t2 * t2;
                    }
                    return s;
                },
                uniform_box(dim, -30.0, 30.0), 0.0};
    }
    if (name == "rastrigin") {
        return {name,
                [](const std::vector<double>& x) {
                    double s = 10.0 * static_cast<double>(x.size());
                    for (double v : x) s += v * v - 10.0 * std::cos(2.0 * pi * v);
                    return s;
                },
                uniform_box(dim, -5.12, 5.12), 0.0};
    }
    if (name == "ackley") {
        return {name,
                [](const std::vector<double>& x) {
                    double sum_sq = 0.0, sum_cos = 0.0;
                    for (double v : x) {
                        sum_sq += v * v;
                        sum_cos += std::cos(2.0 * pi * v);
                    }
                    double n = static_cast<double>(x.size());
                    return -20.0 * std::exp(-0.2 * std::sqrt(sum_sq / n)) -
                           std::exp(sum_cos / n) + 20.0 + std::numbers::e;
                },
                uniform_box(dim, -32.0, 32.0), 0.0};
    }
    if (name == "griewank") {
        return {name,
                [](const std::vector<double>& x) {
                    double sum = 0.0, prod = 1.0;
                    for (std::size_t i = 0; i < x.size(); ++i) {
                        sum += x[i] * x[i] / 4000.0;
                        prod *= std::cos(x[i] / std::sqrt(static_cast<double>(i + 1)));
                    }
                    return sum - prod + 1.0;
                },
                uniform_box(dim, -600.0, 600.0), 0.0};
    }
    if (name == "schwefel_2_22") {
        return {name,
                [](const std::vector<double>& x) {
                    double sum = 0.0, prod = 1.0;
                    for (double v : x) {
                        sum += std::abs(v);
                        prod *= std::abs(v);
                    }
                    return sum + prod;
                },
                uniform_box(dim, -10.0, 10.0), 0.0};
    }
    if (name == "zakharov") {
        return {name,
                [](const std::vector<double>& x) {
                    double sum_sq = 0.0, weighted = 0.0;
                    for (std::size_t i = 0; i < x.size(); ++i) {
                        sum_sq += x[i] * x[i];
                        weighted += 0.5 * static_cast<double>(i + 1) * x[i];
                    }
                    double w2 = weighted * weighted;
                    return sum_sq + w2 + w2 * w2;
                },
                uniform_box(dim, -5.0, 10.0), 0.0};
    }
    if (name == "levy") {
        return {name,
                [](const std::vector<double>& x) {
                    auto w = [](double v) { return 1.0 + (v - 1.0) / 4.0; };
                    double w0 = w(x.front());
                    double s = std::sin(pi * w0) * std::sin(pi * w0);
                    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
                        double wi = w(x[i]);
                        double sin_term = std::sin(pi * wi + 1.0);
                        s += (wi - 1.0) * (wi - 1.0) * (1.0 + 10.0 * sin_term * sin_term);
                    }
                    double wn = w(x.back());
                    double sin_last = std::sin(2.0 * pi * wn);
                    s += (wn - 1.0) * (wn - 1.0) * (1.0 + sin_last * sin_last);
                    return s;
                },
                uniform_box(dim, -10.0, 10.0), 0.0};
    }
    throw Error("benchmark: unknown function '" + name + "'");
}

std::vector<std::string> benchmark_names() {
    return {"sphere",   "rosenbrock",    "rastrigin", "ackley",
            "griewank", "schwefel_2_22", "zakharov",  "levy"};
}

Optimizer make_fox_optimizer(int pop_size, double c1, double c2) {
    return [pop_size, c1, c2](const Objective& f, const Bounds& bounds, std::size_t budget,
                              std::uint64_t seed) {
        if (budget < 2 * static_cast<std::size_t>(pop_size)) {
            throw Error("fox optimizer: budget " + std::to_string(budget) +
                        " too small for one full iteration at population " +
                        std::to_string(pop_size));
        }
        FoxConfig cfg;
        cfg.pop_size = pop_size;
        cfg.max_iters = static_cast<int>(budget / static_cast<std::size_t>(pop_size)) - 1;
        cfg.seed = seed;
        cfg.c1 = c1;
        cfg.c2 = c2;
        return fox_optimize(f, bounds, cfg);
    };
}

Optimizer make_random_search_optimizer() {
    return [](const Objective& f, const Bounds& bounds, std::size_t budget, std::uint64_t seed) {
        return random_search(f, bounds, budget, seed);
    };
}

std::vector<ComparisonRow> compare_optimizers(
    const std::vector<std::string>& names,
    const std::vector<std::pair<std::string, Optimizer>>& optimizers,
    const std::vector<std::uint64_t>& seeds, std::size_t budget, std::size_t dim) {
    if (names.empty()) throw Error("compare_optimizers: need at least one benchmark");
    if (optimizers.size() < 2) throw Error("compare_optimizers: need at least two optimizers");
    if (seeds.size() < 3) throw Error("compare_optimizers: need at least three seeds");

    std::vector<ComparisonRow> rows;
    for (const auto& name : names) {
        BenchmarkProblem problem = benchmark(name, dim);
        for (const auto& [opt_name, optimizer] : optimizers) {
            std::vector<double> finals;
            finals.reserve(seeds.size());
            for (std::uint64_t seed : seeds) {
                OptResult r = optimizer(problem.objective, problem.bounds, budget, seed);
                finals.push_back(r.best_fitness);
            }
            std::sort(finals.begin(), finals.end());
            ComparisonRow row;
            row.benchmark = name;
            row.optimizer = opt_name;
            row.median = quantile(finals, 0.5);
            row.iqr = quantile(finals, 0.75) - quantile(finals, 0.25);
            row.best = finals.front();
            row.worst = finals.back();
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::string comparison_to_csv(const std::vector<ComparisonRow>& rows) {
    std::ostringstream out;
    out << "benchmark,optimizer,median,iqr,best,worst\n";
    for (const auto& r : rows) {
        out << r.benchmark << ',' << r.optimizer << ',' << format_double(r.median) << ','
            << format_double(r.iqr) << ',' << format_double(r.best) << ','
            << format_double(r.worst) << '\n';
    }
    return out.str();
}

nlohmann::json comparison_to_json(const std::vector<ComparisonRow>& rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) {
        arr.push_back({{"benchmark", r.benchmark},
                       {"optimizer", r.optimizer},
                       {"median", r.median},
                       {"iqr", r.iqr},
                       {"best", r.best},
                       {"worst", r.worst}});
    }
    return arr;
}

std::string comparison_to_text(const std::vector<ComparisonRow>& rows) {
    std::ostringstream out;
    out << std::left << std::setw(16) << "benchmark" << std::setw(16) << "optimizer"
        << std::right << std::setw(14) << "median" << std::setw(14) << "iqr" << '\n';
    for (const auto& r : rows) {
        out << std::left << std::setw(16) << r.benchmark << std::setw(16) << r.optimizer
            << std::right << std::setw(14) << std::scientific << std::setprecision(3) << r.median
            << std::setw(14) << r.iqr << '\n';
    }
    return out.str();
}

} // namespace tabfox
