#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace tabfox {

/// Minimization objective. Must return a finite value anywhere in the box.
using Objective = std::function<double(const std::vector<double>&)>;

struct Bounds {
    std::vector<double> lower;
    std::vector<double> upper;

    std::size_t dim() const { return lower.size(); }
    void validate() const;
    bool contains(const std::vector<double>& x) const;
};

struct FoxConfig {
    int pop_size = 20;
    int max_iters = 50;
    std::uint64_t seed = 0;
    double c1 = 0.18; // exploitation jump scale, north-jump branch
    double c2 = 0.82; // exploitation jump scale, opposite branch
};

struct OptResult {
    std::vector<double> best_x;
    double best_fitness = 0.0;
    std::vector<double> history; // best-so-far after init and each iteration
    std::size_t evaluations = 0;
};

/// FOX metaheuristic. Population moves each iteration by either an
/// exploitation jump scaled off the best-known position or a normal
/// perturbation around it; positions are clamped to the box after every move
/// and the best-so-far never regresses. Uses exactly
/// pop_size * (max_iters + 1) objective evaluations. `initial` positions, if
/// given, replace the first agents' random initialization.
OptResult fox_optimize(const Objective& f, const Bounds& bounds, const FoxConfig& cfg,
                       const std::vector<std::vector<double>>& initial = {});

/// Best of `budget` uniform samples; the statistical baseline.
OptResult random_search(const Objective& f, const Bounds& bounds, std::size_t budget,
                        std::uint64_t seed);

struct BenchmarkProblem {
    std::string name;
    Objective objective;
    Bounds bounds;
    double known_optimum = 0.0;
};

/// Classical suite: sphere, rosenbrock, rastrigin, ackley, griewank,
/// schwefel_2_22, zakharov, levy.
BenchmarkProblem benchmark(const std::string& name, std::size_t dim);
std::vector<std::string> benchmark_names();

/// An optimizer under comparison: (objective, bounds, evaluation budget, seed).
using Optimizer =
    std::function<OptResult(const Objective&, const Bounds&, std::size_t, std::uint64_t)>;

/// FOX adapter for budgeted comparisons: runs budget/pop_size - 1 iterations.
Optimizer make_fox_optimizer(int pop_size, double c1 = 0.18, double c2 = 0.82);
Optimizer make_random_search_optimizer();

struct ComparisonRow {
    std::string benchmark;
    std::string optimizer;
    double median = 0.0;
    double iqr = 0.0;
    double best = 0.0;
    double worst = 0.0;
};

/// Runs every optimizer on every benchmark over the given seeds at equal
/// evaluation budget; rows are ordered (benchmark, optimizer).
std::vector<ComparisonRow> compare_optimizers(
    const std::vector<std::string>& names,
    const std::vector<std::pair<std::string, Optimizer>>& optimizers,
    const std::vector<std::uint64_t>& seeds, std::size_t budget, std::size_t dim);

std::string comparison_to_csv(const std::vector<ComparisonRow>& rows);
nlohmann::json comparison_to_json(const std::vector<ComparisonRow>& rows);
std::string comparison_to_text(const std::vector<ComparisonRow>& rows);

} // namespace tabfox
