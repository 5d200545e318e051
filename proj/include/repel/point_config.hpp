#pragma once

// Repulsion matrices of 2r-separated planar point configurations,
//
//     A_ij = 1 / (r + |z_i - z_j|),
//
// the equality-constrained quadratic program min { x^T A x : sum x = 1 } with
// solution x* = lambda A^{-1} 1, lambda = 1 / (1^T A^{-1} 1), and tooling to
// gather evidence on whether A^{-1} 1 is entrywise nonnegative.

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "repel/conjugate_gradient.hpp"
#include "repel/errors.hpp"
#include "repel/generational_set.hpp"
#include "repel/numeric.hpp"

namespace repel {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Point2&) const = default;
};

inline double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// First pair (i < j) closer than 2r, if any.
inline std::optional<std::pair<std::size_t, std::size_t>> find_separation_violation(
    double r, std::span<const Point2> points) {
    const double min_distance = 2.0 * r * (1.0 - 1e-12);
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = i + 1; j < points.size(); ++j) {
            if (distance(points[i], points[j]) < min_distance) return std::make_pair(i, j);
        }
    }
    return std::nullopt;
}

/// Scale r and points z_1..z_N with |z_i - z_j| >= 2r for i != j.
class PointConfiguration {
public:
    PointConfiguration(double r, std::vector<Point2> points) : r_(r), points_(std::move(points)) {
        if (!(r_ > 0.0) || !std::isfinite(r_)) throw DomainError("configuration scale r must be positive");
        if (points_.empty()) throw DomainError("configuration needs at least one point");
        for (const Point2& p : points_) {
            if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw DomainError("configuration points must be finite");
        }
        if (const auto bad = find_separation_violation(r_, points_)) {
            throw DomainError("points " + std::to_string(bad->first) + " and " + std::to_string(bad->second) +
                              " are closer than 2r");
        }
    }

    double r() const { return r_; }
    std::size_t size() const { return points_.size(); }
    const std::vector<Point2>& points() const { return points_; }
    const Point2& operator[](std::size_t i) const { return points_[i]; }

    /// Entry (r + |z_i - z_j|)^{-1}.
    double kernel(std::size_t i, std::size_t j) const { return 1.0 / (r_ + distance(points_[i], points_[j])); }

private:
    double r_;
    std::vector<Point2> points_;
};

class RepulsionMatrix {
public:
    explicit RepulsionMatrix(const PointConfiguration& config) : r_(config.r()) {
        const auto n = static_cast<Eigen::Index>(config.size());
        entries_.resize(n, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            entries_(j, j) = 1.0 / r_;
            for (Eigen::Index i = j + 1; i < n; ++i) {
                const double a = config.kernel(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
                entries_(i, j) = a;
                entries_(j, i) = a;
            }
        }
    }

    double r() const { return r_; }
    std::size_t size() const { return static_cast<std::size_t>(entries_.rows()); }
    double operator()(std::size_t i, std::size_t j) const {
        return entries_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    const Eigen::MatrixXd& entries() const { return entries_; }

private:
    double r_;
    Eigen::MatrixXd entries_;
};

inline RepulsionMatrix build_repulsion_matrix(const PointConfiguration& config) { return RepulsionMatrix(config); }

/// Centers of the 4^n leaf squares of the Cantor generation n; r is half the leaf side.
inline PointConfiguration cantor_configuration(int n) {
    if (n < 1 || n > 7) throw DomainError("cantor configuration generation must be in 1..7");
    const GenerationalSet set = build_cantor(n);
    std::vector<Point2> pts;
    pts.reserve(set.leaf_count());
    for (std::size_t i = 0; i < set.leaf_count(); ++i) {
        const Box& b = set.box(set.leaf_node(i));
        pts.push_back({b.cx, b.cy});
    }
    const double r = set.box(set.leaf_node(0)).hw;
    return PointConfiguration(r, std::move(pts));
}

/// Seeded dart throwing in [0, box]^2 with minimum distance 2r.
inline PointConfiguration random_separated_configuration(std::size_t count, double r, double box, std::uint64_t seed,
                                                         std::size_t max_attempts = 0) {
    if (count < 1) throw DomainError("configuration needs at least one point");
    if (!(r > 0.0) || !(box > 0.0)) throw DomainError("r and box must be positive");
    const double footprint = static_cast<double>(count) * (2.0 * r) * (2.0 * r);
    if (footprint > 0.5 * box * box) {
        throw DomainError("requested density too high: N (2r)^2 must be <= box^2 / 2");
    }
    if (max_attempts == 0) max_attempts = 1000 * count + 10000;

    // Cells of side 2r: any conflicting point lies in the 5x5 block around a candidate's cell.
    const double cell = 2.0 * r;
    const auto cells = static_cast<std::int64_t>(std::ceil(box / cell)) + 1;
    std::unordered_map<std::int64_t, std::vector<std::size_t>> grid;
    const auto cell_of = [&](double v) { return static_cast<std::int64_t>(std::floor(v / cell)); };

    Rng rng(seed);
    std::vector<Point2> pts;
    pts.reserve(count);
    std::size_t attempts = 0;
    while (pts.size() < count) {
        if (attempts++ >= max_attempts) {
            throw NumericalError("dart throwing placed " + std::to_string(pts.size()) + " of " +
                                 std::to_string(count) + " points before the attempt cap");
        }
        const Point2 candidate{rng.uniform(0.0, box), rng.uniform(0.0, box)};
        const std::int64_t cx = cell_of(candidate.x);
        const std::int64_t cy = cell_of(candidate.y);
        bool ok = true;
        for (std::int64_t gx = cx - 2; gx <= cx + 2 && ok; ++gx) {
            for (std::int64_t gy = cy - 2; gy <= cy + 2 && ok; ++gy) {
                const auto it = grid.find(gx * cells + gy);
                if (it == grid.end()) continue;
                for (std::size_t k : it->second) {
                    if (distance(pts[k], candidate) < 2.0 * r) {
                        ok = false;
                        break;
                    }
                }
            }
        }
        if (!ok) continue;
        grid[cx * cells + cy].push_back(pts.size());
        pts.push_back(candidate);
    }
    return PointConfiguration(r, std::move(pts));
}

struct EquilibriumSolution {
    std::vector<double> x_star;   // lambda A^{-1} 1
    std::vector<double> inverse_row_sums;  // A^{-1} 1
    double lambda = 0.0;
    bool nonneg = false;
    double residual = 0.0;        // ||A y - 1||_inf for y = A^{-1} 1
    bool iterative = false;
    std::size_t iterations = 0;
};

struct SolveOptions {
    std::size_t dense_limit = 4096;
    double cg_tolerance = 1e-10;
    std::size_t max_cg_iterations = 20000;
    unsigned threads = 1;  // matrix-free products only; rows are split, sums unchanged
};

inline constexpr double kNonnegTolerance = 1e-12;

namespace detail {

inline EquilibriumSolution finish_equilibrium(std::vector<double> y, double residual, bool iterative,
                                              std::size_t iterations) {
    const double total = pairwise_sum(y);
    if (!(total > 0.0) || !std::isfinite(total)) {
        throw NumericalError("1^T A^{-1} 1 = " + std::to_string(total) + " is not positive");
    }
    EquilibriumSolution sol;
    sol.lambda = 1.0 / total;
    sol.x_star.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) sol.x_star[i] = sol.lambda * y[i];
    sol.nonneg = *std::min_element(sol.x_star.begin(), sol.x_star.end()) >= -kNonnegTolerance;
    sol.inverse_row_sums = std::move(y);
    sol.residual = residual;
    sol.iterative = iterative;
    sol.iterations = iterations;
    return sol;
}

template <typename Apply>
EquilibriumSolution solve_equilibrium_cg(Apply&& apply, std::span<const double> diagonal, const SolveOptions& options) {
    const std::size_t n = diagonal.size();
    std::vector<double> inv_diag(n);
    for (std::size_t i = 0; i < n; ++i) inv_diag[i] = 1.0 / diagonal[i];
    const std::vector<double> ones(n, 1.0);
    std::vector<double> y(inv_diag);
    const CgResult cg = conjugate_gradient(apply, ones, y, inv_diag, options.cg_tolerance, options.max_cg_iterations);
    std::vector<double> ay(n);
    apply(std::span<const double>(y), std::span<double>(ay));
    double residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) residual = std::max(residual, std::abs(ay[i] - 1.0));
    if (!cg.converged) {
        throw NumericalError("conjugate gradient stalled at relative residual " +
                             std::to_string(cg.relative_residual) + " after " + std::to_string(cg.iterations) +
                             " iterations (N = " + std::to_string(n) + ")");
    }
    return finish_equilibrium(std::move(y), residual, true, cg.iterations);
}

}  // namespace detail

inline EquilibriumSolution solve_equilibrium(const RepulsionMatrix& matrix, const SolveOptions& options = {}) {
    const Eigen::MatrixXd& a = matrix.entries();
    const auto n = a.rows();
    if (static_cast<std::size_t>(n) <= options.dense_limit) {
        const Eigen::LLT<Eigen::MatrixXd> llt(a);
        if (llt.info() != Eigen::Success) {
            const Eigen::VectorXd d = a.diagonal();
            throw NumericalError("Cholesky factorization failed for N = " + std::to_string(n) +
                                 " (diagonal range " + std::to_string(d.minCoeff()) + ".." +
                                 std::to_string(d.maxCoeff()) + "); matrix is not numerically positive definite");
        }
        const Eigen::VectorXd y = llt.solve(Eigen::VectorXd::Ones(n));
        const double residual = (a * y - Eigen::VectorXd::Ones(n)).lpNorm<Eigen::Infinity>();
        return detail::finish_equilibrium(std::vector<double>(y.data(), y.data() + n), residual, false, 0);
    }
    const std::vector<double> diag(static_cast<std::size_t>(n), 1.0 / matrix.r());
    const auto apply = [&](std::span<const double> in, std::span<double> out) {
        Eigen::Map<const Eigen::VectorXd> x(in.data(), n);
        Eigen::Map<Eigen::VectorXd> y(out.data(), n);
        y.noalias() = a * x;
    };
    return detail::solve_equilibrium_cg(apply, diag, options);
}

/// Solves directly from the configuration; above the dense limit the matrix is
/// never stored and entries are recomputed in each matrix-vector product.
inline EquilibriumSolution solve_equilibrium(const PointConfiguration& config, const SolveOptions& options = {}) {
    if (config.size() <= options.dense_limit) return solve_equilibrium(build_repulsion_matrix(config), options);
    const std::size_t n = config.size();
    const std::vector<double> diag(n, 1.0 / config.r());
    const unsigned workers = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(n)));
    const auto rows = [&](std::span<const double> in, std::span<double> out, std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += config.kernel(i, j) * in[j];
            out[i] = s;
        }
    };
    const auto apply = [&](std::span<const double> in, std::span<double> out) {
        if (workers == 1) {
            rows(in, out, 0, n);
            return;
        }
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back(rows, in, out, n * w / workers, n * (w + 1) / workers);
        for (std::thread& t : pool) t.join();
    };
    return detail::solve_equilibrium_cg(apply, diag, options);
}

/// 1^T A^{-1} 1 = 1 / lambda, the capacity lower-bound statistic.
inline double capacity_lower_bound(const EquilibriumSolution& solution) { return 1.0 / solution.lambda; }

struct RowSumReport {
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double spread = 1.0;             // max / min
    double predicted_lambda = 0.0;   // mean / N
    std::optional<double> solved_lambda;
    std::optional<bool> agrees;      // predicted / solved within [1/spread, spread]
};

namespace detail {

inline RowSumReport summarize_row_sums(std::span<const double> sums, const EquilibriumSolution* solution) {
    RowSumReport rep;
    rep.min = *std::min_element(sums.begin(), sums.end());
    rep.max = *std::max_element(sums.begin(), sums.end());
    rep.mean = pairwise_sum(sums) / static_cast<double>(sums.size());
    rep.spread = rep.max / rep.min;
    rep.predicted_lambda = rep.mean / static_cast<double>(sums.size());
    if (solution) {
        rep.solved_lambda = solution->lambda;
        const double ratio = rep.predicted_lambda / solution->lambda;
        // Relative slack absorbs rounding when the spread is exactly 1.
        const double slack = 1e-12;
        rep.agrees = ratio >= (1.0 - slack) / rep.spread && ratio <= rep.spread * (1.0 + slack);
    }
    return rep;
}

}  // namespace detail

inline RowSumReport row_sum_report(const RepulsionMatrix& matrix, const EquilibriumSolution* solution = nullptr) {
    const Eigen::VectorXd s = matrix.entries().rowwise().sum();
    return detail::summarize_row_sums(std::span<const double>(s.data(), static_cast<std::size_t>(s.size())), solution);
}

inline RowSumReport row_sum_report(const PointConfiguration& config, const EquilibriumSolution* solution = nullptr) {
    std::vector<double> sums(config.size());
    for (std::size_t i = 0; i < config.size(); ++i) {
        std::vector<double> row(config.size());
        for (std::size_t j = 0; j < config.size(); ++j) row[j] = config.kernel(i, j);
        sums[i] = pairwise_sum(row);
    }
    return detail::summarize_row_sums(sums, solution);
}

/// An entry of A^{-1} 1 counts as negative only below -1e-9 times the largest entry.
inline constexpr double kConjectureTolerance = 1e-9;

struct ConjectureRow {
    std::size_t instance_id = 0;
    std::size_t n_points = 0;
    double r = 0.0;
    double lambda = std::numeric_limits<double>::quiet_NaN();
    double capacity_stat = std::numeric_limits<double>::quiet_NaN();
    double min_weight = std::numeric_limits<double>::quiet_NaN();
    bool nonneg = false;
    double rowsum_min = std::numeric_limits<double>::quiet_NaN();
    double rowsum_max = std::numeric_limits<double>::quiet_NaN();
    double residual = std::numeric_limits<double>::quiet_NaN();
    bool flagged = false;
    std::string error;  // non-empty when the solve failed
};

struct ConjectureReport {
    std::vector<ConjectureRow> rows;
    std::vector<std::size_t> flagged;    // instance ids of candidate counterexamples
    std::vector<std::size_t> failed;     // instance ids whose solve failed
};

inline ConjectureRow evaluate_conjecture_instance(std::size_t id, const PointConfiguration& config,
                                                  const SolveOptions& options = {}) {
    ConjectureRow row;
    row.instance_id = id;
    row.n_points = config.size();
    row.r = config.r();
    try {
        EquilibriumSolution sol;
        RowSumReport sums;
        if (config.size() <= options.dense_limit) {
            const RepulsionMatrix a = build_repulsion_matrix(config);
            sol = solve_equilibrium(a, options);
            sums = row_sum_report(a);
        } else {
            sol = solve_equilibrium(config, options);
            sums = row_sum_report(config);
        }
        const auto& y = sol.inverse_row_sums;
        const double y_max = *std::max_element(y.begin(), y.end());
        const double y_min = *std::min_element(y.begin(), y.end());
        row.lambda = sol.lambda;
        row.capacity_stat = capacity_lower_bound(sol);
        row.min_weight = *std::min_element(sol.x_star.begin(), sol.x_star.end());
        row.nonneg = sol.nonneg;
        row.rowsum_min = sums.min;
        row.rowsum_max = sums.max;
        row.residual = sol.residual;
        row.flagged = y_min < -kConjectureTolerance * std::abs(y_max);
    } catch (const std::exception& e) {
        row.error = e.what();
    }
    return row;
}

/// Solves every instance; failures are recorded per row and the sweep continues.
inline ConjectureReport conjecture_sweep(const std::vector<PointConfiguration>& instances, unsigned threads = 1,
                                         const SolveOptions& options = {}) {
    ConjectureReport report;
    report.rows.resize(instances.size());
    const unsigned workers =
        std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, instances.size()))));
    if (workers == 1) {
        for (std::size_t i = 0; i < instances.size(); ++i)
            report.rows[i] = evaluate_conjecture_instance(i, instances[i], options);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < instances.size(); i = next++)
                    report.rows[i] = evaluate_conjecture_instance(i, instances[i], options);
            });
        }
        for (std::thread& t : pool) t.join();
    }
    for (const ConjectureRow& row : report.rows) {
        if (!row.error.empty()) report.failed.push_back(row.instance_id);
        if (row.flagged) report.flagged.push_back(row.instance_id);
    }
    return report;
}

}  // namespace repel
