#pragma once

// Repulsion minimization over the probability simplex on the leaves.
//
// Q is a positive-definite quadratic form (the generation-n increment
// contributes (r_n - r_{n-1}) I), so the simplex problem has a unique
// minimizer and any KKT point is it. Stage 1 solves the stationarity system
// G y = 1 matrix-free and normalizes; stage 2 (projected gradient) runs only
// if that point leaves the simplex.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "repel/conjugate_gradient.hpp"
#include "repel/errors.hpp"
#include "repel/generational_set.hpp"
#include "repel/numeric.hpp"
#include "repel/repulsion.hpp"

namespace repel {

struct MinimizationResult {
    LeafMeasure minimizer;
    double min_value = 0.0;
    std::size_t iterations = 0;
    double kkt_residual = 0.0;
    std::size_t active_bound_count = 0;
    bool used_projected_gradient = false;
};

/// Iteration cap reached; carries the best iterate found.
class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what, MinimizationResult best_iterate)
        : NumericalError(what), best(std::move(best_iterate)) {}

    MinimizationResult best;
};

struct MinimizerOptions {
    double kkt_tolerance = 1e-9;
    std::size_t max_iterations = 100000;
    double cg_tolerance = 1e-14;
};

/// Euclidean projection onto {x >= 0, sum x = 1} (sort-and-threshold).
inline std::vector<double> project_to_simplex(std::span<const double> v) {
    std::vector<double> sorted(v.begin(), v.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double running = 0.0;
    double theta = 0.0;
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        running += sorted[k];
        const double candidate = (running - 1.0) / static_cast<double>(k + 1);
        if (sorted[k] - candidate > 0.0) theta = candidate;
    }
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(0.0, v[i] - theta);
    return out;
}

/// First-order optimality defect of x on the simplex given potentials p = G x:
/// spread of p around its x-weighted mean on the support, plus the amount by
/// which any zero-mass leaf undercuts that mean.
inline double simplex_kkt_residual(std::span<const double> x, std::span<const double> p) {
    double mean = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) mean += x[i] * p[i];
    double spread = 0.0;
    double complementarity = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] > 0.0) {
            spread = std::max(spread, std::abs(p[i] - mean));
        } else {
            complementarity = std::max(complementarity, mean - p[i]);
        }
    }
    return spread + complementarity;
}

struct ProjectedGradientOutcome {
    std::vector<double> x;
    std::size_t iterations = 0;
    double kkt_residual = std::numeric_limits<double>::infinity();
    bool converged = false;
};

/// Projected gradient for min x^T G x on the simplex, step 1/(2L) with L >= lambda_max(G).
/// Stops once the KKT residual is below tolerance * max(1, x^T G x).
template <typename Apply>
ProjectedGradientOutcome simplex_projected_gradient(Apply&& apply, std::vector<double> x, double lipschitz,
                                                    double tolerance, std::size_t max_iterations) {
    const std::size_t m = x.size();
    std::vector<double> p(m), trial(m);
    ProjectedGradientOutcome best;
    best.x = x;
    const double step = 0.5 / lipschitz;
    for (std::size_t it = 0;; ++it) {
        apply(std::span<const double>(x), std::span<double>(p));
        const double kkt = simplex_kkt_residual(x, p);
        double value = 0.0;
        for (std::size_t i = 0; i < m; ++i) value += x[i] * p[i];
        if (kkt < best.kkt_residual) {
            best.x = x;
            best.kkt_residual = kkt;
        }
        best.iterations = it;
        if (kkt <= tolerance * std::max(1.0, std::abs(value))) {
            best.converged = true;
            return best;
        }
        if (it == max_iterations) return best;
        for (std::size_t i = 0; i < m; ++i) trial[i] = x[i] - step * 2.0 * p[i];
        x = project_to_simplex(trial);
    }
}

namespace detail {

inline MinimizationResult finish_result(const GenerationalSet& set, const RepulsionSchedule& schedule,
                                        std::vector<double> x, std::size_t iterations, bool fallback) {
    // Renormalize so the simplex constraint holds to rounding.
    const double total = pairwise_sum(x);
    for (double& v : x) v /= total;
    std::vector<double> p(x.size());
    apply_gram(set, schedule, x, p);
    const double kkt = simplex_kkt_residual(x, p);
    const auto zeros = static_cast<std::size_t>(std::count(x.begin(), x.end(), 0.0));
    LeafMeasure mu(std::move(x));
    const double value = repulsion_hierarchical(set, schedule, mu);
    return MinimizationResult{std::move(mu), value, iterations, kkt, zeros, fallback};
}

}  // namespace detail

inline MinimizationResult minimize_repulsion(const GenerationalSet& set, const RepulsionSchedule& schedule,
                                             const MinimizerOptions& options = {}) {
    detail::require_schedule(set, schedule);
    const std::size_t m = set.leaf_count();
    const auto gram = [&](std::span<const double> in, std::span<double> out) { apply_gram(set, schedule, in, out); };

    // Stage 1: interior stationarity, G y = 1, mu = y / sum(y).
    const std::vector<double> ones(m, 1.0);
    std::vector<double> y(m, 1.0 / (schedule[schedule.size() - 1] * static_cast<double>(m)));
    const CgResult cg = conjugate_gradient(gram, ones, y, {}, options.cg_tolerance, 10 * m + 100);
    const bool interior = std::all_of(y.begin(), y.end(), [](double v) { return v > 0.0; });
    if (interior) {
        MinimizationResult result = detail::finish_result(set, schedule, y, cg.iterations, false);
        if (result.kkt_residual <= options.kkt_tolerance * std::max(1.0, result.min_value)) return result;
    }

    // Stage 2: projected gradient from the projected stage-1 point.
    std::vector<double> start;
    const double y_total = pairwise_sum(y);
    if (y_total > 0.0 && std::isfinite(y_total)) {
        for (double& v : y) v /= y_total;
        start = project_to_simplex(y);
    } else {
        start.assign(m, 1.0 / static_cast<double>(m));
    }
    // Entries of G are positive, so the largest row sum bounds lambda_max.
    std::vector<double> row_sums(m);
    apply_gram(set, schedule, ones, row_sums);
    const double lipschitz = *std::max_element(row_sums.begin(), row_sums.end());
    ProjectedGradientOutcome pg =
        simplex_projected_gradient(gram, std::move(start), lipschitz, options.kkt_tolerance, options.max_iterations);
    MinimizationResult result =
        detail::finish_result(set, schedule, std::move(pg.x), cg.iterations + pg.iterations, true);
    if (!pg.converged) {
        throw ConvergenceError("projected gradient did not reach the KKT tolerance within " +
                                   std::to_string(options.max_iterations) + " iterations",
                               std::move(result));
    }
    return result;
}

struct EquidistributionReport {
    bool passed = true;
    int worst_generation = 0;
    double worst_ratio = 1.0;  // max / min node mass in the worst generation
    NodeId lightest_node = 0;
    NodeId heaviest_node = 0;
};

/// Checks max/min node mass <= 1 + tol in every generation. Socialist sets only.
inline EquidistributionReport verify_equidistribution(const LeafMeasure& mu, const GenerationalSet& set, double tol) {
    if (!set.is_socialist()) {
        throw DomainError("equidistribution is only predicted for socialist filtrations");
    }
    const std::vector<double> mass = node_masses(set, mu.masses());
    EquidistributionReport report;
    for (int g = 0; g <= set.depth(); ++g) {
        const IdRange nodes = set.generation_nodes(g);
        NodeId lo = *nodes.begin();
        NodeId hi = lo;
        for (NodeId id : nodes) {
            if (mass[static_cast<std::size_t>(id)] < mass[static_cast<std::size_t>(lo)]) lo = id;
            if (mass[static_cast<std::size_t>(id)] > mass[static_cast<std::size_t>(hi)]) hi = id;
        }
        const double min_mass = mass[static_cast<std::size_t>(lo)];
        const double ratio = min_mass > 0.0 ? mass[static_cast<std::size_t>(hi)] / min_mass
                                            : std::numeric_limits<double>::infinity();
        if (ratio > report.worst_ratio) {
            report.worst_ratio = ratio;
            report.worst_generation = g;
            report.lightest_node = lo;
            report.heaviest_node = hi;
        }
    }
    report.passed = report.worst_ratio <= 1.0 + tol;
    return report;
}

inline EquidistributionReport verify_equidistribution(const MinimizationResult& result, const GenerationalSet& set,
                                                      double tol) {
    return verify_equidistribution(result.minimizer, set, tol);
}

struct NondegeneracyReport {
    bool passed = true;
    double min_mass = 0.0;
    std::size_t lightest_leaf = 0;
};

inline NondegeneracyReport verify_nondegeneracy(const LeafMeasure& mu, double tol) {
    const auto masses = mu.masses();
    const auto it = std::min_element(masses.begin(), masses.end());
    NondegeneracyReport report;
    report.min_mass = *it;
    report.lightest_leaf = static_cast<std::size_t>(it - masses.begin());
    report.passed = report.min_mass >= tol;
    return report;
}

inline NondegeneracyReport verify_nondegeneracy(const MinimizationResult& result, double tol) {
    return verify_nondegeneracy(result.minimizer, tol);
}

/// Exhaustive grid search over the simplex followed by pairwise-transfer
/// descent. Uses a dense Gram matrix built from last_common_generation only,
/// so it shares no code path with minimize_repulsion.
inline MinimizationResult brute_force_minimize(const GenerationalSet& set, const RepulsionSchedule& schedule,
                                               int grid) {
    detail::require_schedule(set, schedule);
    const std::size_t m = set.leaf_count();
    if (m > 6) throw DomainError("brute force minimization supports at most 6 leaves");
    if (grid < 1) throw DomainError("grid must be >= 1");

    std::vector<double> gram(m * m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            gram[i * m + j] = schedule[static_cast<std::size_t>(
                last_common_generation(set, set.leaf_node(i), set.leaf_node(j)))];
        }
    }
    const auto form = [&](const std::vector<double>& x) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) s += x[i] * x[j] * gram[i * m + j];
        return s;
    };

    std::vector<int> counts(m, 0);
    std::vector<double> x(m), best(m);
    double best_value = std::numeric_limits<double>::infinity();
    std::size_t evaluations = 0;
    const std::function<void(std::size_t, int)> visit = [&](std::size_t slot, int remaining) {
        if (slot + 1 == m) {
            counts[slot] = remaining;
            for (std::size_t i = 0; i < m; ++i) x[i] = static_cast<double>(counts[i]) / grid;
            ++evaluations;
            const double v = form(x);
            if (v < best_value) {
                best_value = v;
                best = x;
            }
            return;
        }
        for (int c = 0; c <= remaining; ++c) {
            counts[slot] = c;
            visit(slot + 1, remaining - c);
        }
    };
    visit(0, grid);

    // Move mass between pairs of coordinates while it helps, shrinking the step.
    for (double step = 1.0 / grid; step > 1e-13; step *= 0.5) {
        bool improved = true;
        while (improved) {
            improved = false;
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < m; ++j) {
                    if (i == j || best[j] < step) continue;
                    std::vector<double> trial = best;
                    trial[i] += step;
                    trial[j] -= step;
                    ++evaluations;
                    const double v = form(trial);
                    if (v < best_value) {
                        best_value = v;
                        best = std::move(trial);
                        improved = true;
                    }
                }
            }
        }
    }

    std::vector<double> p(m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) p[i] += gram[i * m + j] * best[j];
    const double kkt = simplex_kkt_residual(best, p);
    const auto zeros = static_cast<std::size_t>(std::count(best.begin(), best.end(), 0.0));
    return MinimizationResult{LeafMeasure::normalized(best), best_value, evaluations, kkt, zeros, false};
}

}  // namespace repel
