#pragma once

// Monte-Carlo Riesz 1-energy of leaf measures on geometric generational sets,
// with mass spread uniformly inside each leaf square:
//
//     I_1(mu) = sum_{Q,R} mu(Q) mu(R) E[ 1 / |x - y| ],   x ~ U(Q), y ~ U(R).
//
// Leaf pairs are grouped into geometric classes (|offset| and halfwidths up to
// reflection and transposition) since E depends only on those. Every sample
// draws one shared (u, v) in [-1,1]^2 x [-1,1]^2 and evaluates all classes, so
// the per-sample total is an unbiased estimate of I_1 and the standard error
// comes from the spread of those totals.
//
// Diagonal blocks use the difference D = x - y, whose density on [-s,s]^2 is
// t(d1) t(d2) with t(a) = (s - |a|) / s^2. In polar coordinates the 1/rho
// singularity cancels against the Jacobian, so sampling theta uniformly and
// rho uniformly on the ray gives a bounded estimator.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numbers>
#include <thread>
#include <vector>

#include "repel/errors.hpp"
#include "repel/generational_set.hpp"
#include "repel/numeric.hpp"
#include "repel/repulsion.hpp"

namespace repel {

struct EnergyEstimate {
    double value = 0.0;
    double standard_error = 0.0;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    std::size_t block_classes = 0;
};

struct EnergyOptions {
    std::size_t samples = 100000;
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

inline constexpr std::size_t kMinEnergySamples = 10000;
inline constexpr std::size_t kEnergyBatchSize = 2048;

namespace detail {

struct BlockClass {
    double dx = 0.0;  // |offset| components, dx <= dy
    double dy = 0.0;
    double h1 = 0.0;  // halfwidths, h1 <= h2
    double h2 = 0.0;
    double weight = 0.0;
    bool diagonal = false;
};

inline std::vector<BlockClass> block_classes(const GenerationalSet& set, std::span<const double> mu) {
    std::map<std::array<double, 4>, std::size_t> index;
    std::vector<BlockClass> classes;
    const std::size_t m = set.leaf_count();
    for (std::size_t q = 0; q < m; ++q) {
        if (mu[q] == 0.0) continue;
        const Box& bq = set.box(set.leaf_node(q));
        for (std::size_t r = 0; r < m; ++r) {
            if (mu[r] == 0.0) continue;
            const Box& br = set.box(set.leaf_node(r));
            double ax = std::abs(br.cx - bq.cx);
            double ay = std::abs(br.cy - bq.cy);
            if (ax > ay) std::swap(ax, ay);
            const double h1 = std::min(bq.hw, br.hw);
            const double h2 = std::max(bq.hw, br.hw);
            const std::array<double, 4> key{ax, ay, h1, h2};
            auto [it, inserted] = index.try_emplace(key, classes.size());
            if (inserted) {
                BlockClass c;
                c.dx = ax;
                c.dy = ay;
                c.h1 = h1;
                c.h2 = h2;
                c.diagonal = (q == r) || (ax == 0.0 && ay == 0.0 && h1 == h2);
                classes.push_back(c);
            }
            classes[it->second].weight += mu[q] * mu[r];
        }
    }
    return classes;
}

/// One bounded sample of E[1/|x - y|] for x, y uniform in the unit-side square.
inline double unit_square_self_sample(double u_theta, double u_rho) {
    const double theta = 0.25 * std::numbers::pi * u_theta;  // octant [0, pi/4]
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double rho_max = 1.0 / c;
    const double rho = rho_max * u_rho;
    const double density = (1.0 - rho * c) * (1.0 - rho * s);
    return 2.0 * std::numbers::pi * rho_max * density;
}

struct BatchMoments {
    std::size_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;
};

inline BatchMoments run_energy_batch(const std::vector<BlockClass>& classes, std::uint64_t seed, std::size_t batch,
                                     std::size_t count) {
    Rng rng(mix_seed(seed ^ mix_seed(static_cast<std::uint64_t>(batch))));
    BatchMoments moments;
    for (std::size_t i = 0; i < count; ++i) {
        const double ux = rng.uniform(-1.0, 1.0);
        const double uy = rng.uniform(-1.0, 1.0);
        const double vx = rng.uniform(-1.0, 1.0);
        const double vy = rng.uniform(-1.0, 1.0);
        const double self_unit = unit_square_self_sample(rng.uniform(), rng.uniform());
        double total = 0.0;
        for (const BlockClass& c : classes) {
            if (c.diagonal) {
                total += c.weight * self_unit / (2.0 * c.h1);
            } else {
                const double ex = c.dx + c.h1 * ux - c.h2 * vx;
                const double ey = c.dy + c.h1 * uy - c.h2 * vy;
                total += c.weight / std::sqrt(ex * ex + ey * ey);
            }
        }
        ++moments.count;
        const double delta = total - moments.mean;
        moments.mean += delta / static_cast<double>(moments.count);
        moments.m2 += delta * (total - moments.mean);
    }
    return moments;
}

}  // namespace detail

inline EnergyEstimate energy_mc(const GenerationalSet& set, const LeafMeasure& mu, const EnergyOptions& options) {
    if (!set.has_geometry()) throw DomainError("energy estimation needs geometry");
    detail::require_leaf_vector(set, mu.size());
    if (options.samples < kMinEnergySamples) {
        throw DomainError("energy estimation needs at least " + std::to_string(kMinEnergySamples) + " samples");
    }
    const std::vector<detail::BlockClass> classes = detail::block_classes(set, mu.masses());

    const std::size_t batches = (options.samples + kEnergyBatchSize - 1) / kEnergyBatchSize;
    std::vector<detail::BatchMoments> moments(batches);
    const auto batch_count = [&](std::size_t b) {
        return std::min(kEnergyBatchSize, options.samples - b * kEnergyBatchSize);
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(batches)));
    if (workers == 1) {
        for (std::size_t b = 0; b < batches; ++b)
            moments[b] = detail::run_energy_batch(classes, options.seed, b, batch_count(b));
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t b = next++; b < batches; b = next++)
                    moments[b] = detail::run_energy_batch(classes, options.seed, b, batch_count(b));
            });
        }
        for (std::thread& t : pool) t.join();
    }

    // Chan's pairwise combination, in batch order.
    detail::BatchMoments all;
    for (const detail::BatchMoments& part : moments) {
        if (part.count == 0) continue;
        const double n_a = static_cast<double>(all.count);
        const double n_b = static_cast<double>(part.count);
        const double delta = part.mean - all.mean;
        const double n = n_a + n_b;
        all.mean += delta * n_b / n;
        all.m2 += part.m2 + delta * delta * n_a * n_b / n;
        all.count += part.count;
    }
    const double variance = all.m2 / static_cast<double>(all.count - 1);
    EnergyEstimate est;
    est.value = all.mean;
    est.standard_error = std::sqrt(variance / static_cast<double>(all.count));
    est.samples = all.count;
    est.seed = options.seed;
    est.block_classes = classes.size();
    return est;
}

inline EnergyEstimate energy_mc(const GenerationalSet& set, const LeafMeasure& mu, std::size_t samples,
                                std::uint64_t seed, unsigned threads = 1) {
    return energy_mc(set, mu, EnergyOptions{samples, seed, threads});
}

struct RepulsionEnergyBound {
    double bound = 0.0;       // constant * repulsion
    double constant = 0.0;    // c with 1/|x - y| >= c r_l for points in a common generation-l node
    double repulsion = 0.0;   // Q_r(mu)
};

/// Lower bound c Q_r(mu) <= I_1(mu). Two leaves whose last common generation is l
/// lie in one generation-l node P, so 1/|x - y| >= 1/diam(P) >= c r_l with
/// c = min over nodes P of 1 / (r_gen(P) diam(P)); the diagonal is the l = n case.
/// Clause (a) of even distribution guarantees c >= 1/C.
inline RepulsionEnergyBound energy_lower_bound_via_repulsion(const GenerationalSet& set,
                                                             const RepulsionSchedule& schedule,
                                                             const LeafMeasure& mu, double c_even = 2.0,
                                                             double eps_even = 0.5) {
    const EvenDistributionReport even = validate_even_distribution(set, schedule, c_even, eps_even);
    if (!even.passed()) {
        throw DomainError("set is not evenly distributed for this schedule (worst diameter factor " +
                          std::to_string(even.worst_diameter_factor) + ", worst separation " +
                          std::to_string(even.worst_separation) + ")");
    }
    double c = std::numeric_limits<double>::infinity();
    for (int l = 0; l <= set.depth(); ++l) {
        for (NodeId id : set.generation_nodes(l)) {
            c = std::min(c, 1.0 / (schedule[static_cast<std::size_t>(l)] * set.box(id).diameter()));
        }
    }
    RepulsionEnergyBound out;
    out.repulsion = repulsion_hierarchical(set, schedule, mu);
    out.constant = c;
    out.bound = c * out.repulsion;
    return out;
}

}  // namespace repel
