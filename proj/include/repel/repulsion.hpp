#pragma once

// The repulsion quadratic form
//
//     Q(mu) = sum_{Q,R leaves} mu(Q) mu(R) r(Q, R),   r(Q, R) = r_{lcg(Q, R)},
//
// where lcg is the last common generation (n on the diagonal). Grouping pairs
// by last common generation gives the telescoped form used by the fast paths:
//
//     Q(mu) = r_0 T_0 + sum_{l=1..n} (r_l - r_{l-1}) T_l,   T_l = sum_{P in gen l} mu(P)^2.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "repel/errors.hpp"
#include "repel/generational_set.hpp"
#include "repel/numeric.hpp"

namespace repel {

namespace detail {

inline void require_schedule(const GenerationalSet& set, const RepulsionSchedule& schedule) {
    if (static_cast<int>(schedule.size()) != set.depth() + 1) {
        throw DomainError("schedule has " + std::to_string(schedule.size()) + " entries, expected n + 1 = " +
                          std::to_string(set.depth() + 1));
    }
}

inline void require_leaf_vector(const GenerationalSet& set, std::size_t size) {
    if (size != set.leaf_count()) {
        throw DomainError("leaf vector has " + std::to_string(size) + " entries, set has " +
                          std::to_string(set.leaf_count()) + " leaves");
    }
}

inline void require_siblings(const GenerationalSet& set, NodeId a, NodeId b) {
    const auto total = static_cast<NodeId>(set.node_count());
    if (a < 0 || b < 0 || a >= total || b >= total) throw DomainError("node id out of range");
    if (a == b) throw DomainError("mass exchange needs two distinct nodes");
    if (set.generation(a) == 0 || set.parent(a) != set.parent(b)) {
        throw DomainError("mass exchange needs siblings (same parent)");
    }
}

/// ancestors[l][leaf index] = generation-l ancestor id.
inline std::vector<std::vector<NodeId>> ancestor_table(const GenerationalSet& set) {
    const int n = set.depth();
    std::vector<std::vector<NodeId>> table(static_cast<std::size_t>(n) + 1,
                                           std::vector<NodeId>(set.leaf_count()));
    for (std::size_t i = 0; i < set.leaf_count(); ++i) {
        NodeId id = set.leaf_node(i);
        for (int l = n; l >= 0; --l) {
            table[static_cast<std::size_t>(l)][i] = id;
            id = set.parent(id);
        }
    }
    return table;
}

}  // namespace detail

/// Subtree sums of an arbitrary leaf vector, indexed by node id.
inline std::vector<double> node_masses(const GenerationalSet& set, std::span<const double> leaf_values) {
    detail::require_leaf_vector(set, leaf_values.size());
    std::vector<double> mass(set.node_count(), 0.0);
    const NodeId leaf0 = set.leaf_begin();
    for (std::size_t i = 0; i < leaf_values.size(); ++i) mass[static_cast<std::size_t>(leaf0) + i] = leaf_values[i];
    for (NodeId id = static_cast<NodeId>(set.node_count()) - 1; id > 0; --id) {
        mass[static_cast<std::size_t>(set.parent(id))] += mass[static_cast<std::size_t>(id)];
    }
    return mass;
}

/// T_l = sum over generation-l nodes of mu(P)^2.
struct GenerationMassSquares {
    std::vector<double> per_generation;

    double operator[](std::size_t l) const { return per_generation[l]; }
    std::size_t size() const { return per_generation.size(); }
};

inline GenerationMassSquares mass_squares_from_node_masses(const GenerationalSet& set,
                                                           std::span<const double> mass) {
    GenerationMassSquares out;
    out.per_generation.resize(static_cast<std::size_t>(set.depth()) + 1);
    std::vector<double> squares;
    for (int l = 0; l <= set.depth(); ++l) {
        squares.clear();
        for (NodeId id : set.generation_nodes(l)) {
            const double m = mass[static_cast<std::size_t>(id)];
            squares.push_back(m * m);
        }
        out.per_generation[static_cast<std::size_t>(l)] = pairwise_sum(squares);
    }
    return out;
}

inline GenerationMassSquares generation_mass_squares(const GenerationalSet& set, const LeafMeasure& mu) {
    return mass_squares_from_node_masses(set, node_masses(set, mu.masses()));
}

/// Quadratic form of an arbitrary leaf vector via the telescoped identity, O(M).
inline double repulsion_form(const GenerationalSet& set, const RepulsionSchedule& schedule,
                             std::span<const double> x) {
    detail::require_schedule(set, schedule);
    const std::vector<double> mass = node_masses(set, x);
    const GenerationMassSquares t = mass_squares_from_node_masses(set, mass);
    std::vector<double> terms(t.size());
    for (std::size_t l = 0; l < t.size(); ++l) terms[l] = schedule.increment(l) * t[l];
    return pairwise_sum(terms);
}

/// Exact double sum over all ordered leaf pairs, O(M^2).
inline double repulsion_naive(const GenerationalSet& set, const RepulsionSchedule& schedule,
                              const LeafMeasure& mu) {
    detail::require_schedule(set, schedule);
    detail::require_leaf_vector(set, mu.size());
    const auto anc = detail::ancestor_table(set);
    const int n = set.depth();
    const std::size_t m = set.leaf_count();
    std::vector<double> row(m);
    std::vector<double> rows(m);
    for (std::size_t q = 0; q < m; ++q) {
        for (std::size_t r = 0; r < m; ++r) {
            int l = 0;
            while (l < n && anc[static_cast<std::size_t>(l) + 1][q] == anc[static_cast<std::size_t>(l) + 1][r]) ++l;
            row[r] = mu[r] * schedule[static_cast<std::size_t>(l)];
        }
        rows[q] = mu[q] * pairwise_sum(row);
    }
    return pairwise_sum(rows);
}

inline double repulsion_hierarchical(const GenerationalSet& set, const RepulsionSchedule& schedule,
                                     const LeafMeasure& mu) {
    return repulsion_form(set, schedule, mu.masses());
}

/// out = G x, where G[Q][R] = r(Q, R) is the leaf-pair repulsion Gram matrix.
/// Aggregates x up the tree, then distributes increment-weighted sums down; O(M).
inline void apply_gram(const GenerationalSet& set, const RepulsionSchedule& schedule, std::span<const double> x,
                       std::span<double> out) {
    detail::require_schedule(set, schedule);
    detail::require_leaf_vector(set, out.size());
    const std::vector<double> mass = node_masses(set, x);
    std::vector<double> acc(set.node_count());
    acc[0] = schedule.increment(0) * mass[0];
    for (NodeId id = 1; id < static_cast<NodeId>(set.node_count()); ++id) {
        const auto g = static_cast<std::size_t>(set.generation(id));
        acc[static_cast<std::size_t>(id)] =
            acc[static_cast<std::size_t>(set.parent(id))] + schedule.increment(g) * mass[static_cast<std::size_t>(id)];
    }
    const auto leaf0 = static_cast<std::size_t>(set.leaf_begin());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = acc[leaf0 + i];
}

/// Potential sum_R r(Q, R) mu(R) at every leaf Q.
inline std::vector<double> potentials(const GenerationalSet& set, const RepulsionSchedule& schedule,
                                      const LeafMeasure& mu) {
    std::vector<double> out(set.leaf_count());
    apply_gram(set, schedule, mu.masses(), out);
    return out;
}

/// Potential at a single leaf (node id).
inline double potential(const GenerationalSet& set, const RepulsionSchedule& schedule, const LeafMeasure& mu,
                        NodeId leaf) {
    detail::require_schedule(set, schedule);
    detail::require_leaf_vector(set, mu.size());
    const std::size_t index = set.leaf_index(leaf);
    const std::vector<double> mass = node_masses(set, mu.masses());
    double value = 0.0;
    NodeId id = set.leaf_node(index);
    for (int l = set.depth(); l >= 0; --l) {
        value += schedule.increment(static_cast<std::size_t>(l)) * mass[static_cast<std::size_t>(id)];
        id = set.parent(id);
    }
    return value;
}

/// Rescales the masses under siblings A and B so both carry (mu(A) + mu(B)) / 2.
inline LeafMeasure mass_exchange(const LeafMeasure& mu, const GenerationalSet& set, NodeId a, NodeId b) {
    detail::require_leaf_vector(set, mu.size());
    detail::require_siblings(set, a, b);
    const auto [a_lo, a_hi] = set.leaf_span(a);
    const auto [b_lo, b_hi] = set.leaf_span(b);
    const double mass_a = pairwise_sum(mu.masses().subspan(a_lo, a_hi - a_lo));
    const double mass_b = pairwise_sum(mu.masses().subspan(b_lo, b_hi - b_lo));
    if (!(mass_a > 0.0) || !(mass_b > 0.0)) throw DomainError("mass exchange needs mu(A) > 0 and mu(B) > 0");
    const double mean = 0.5 * (mass_a + mass_b);
    std::vector<double> out(mu.masses().begin(), mu.masses().end());
    for (std::size_t i = a_lo; i < a_hi; ++i) out[i] *= mean / mass_a;
    for (std::size_t i = b_lo; i < b_hi; ++i) out[i] *= mean / mass_b;
    return LeafMeasure(std::move(out));
}

/// Q(mu) - Q(mu~) for the exchange between siblings A, B in generation k + 1:
///
///   sum_{k <= l <= n-1} (r_{l+1} - r_l) ( [1 - alpha^2] sum_{P in gen l+1, P in A} mu(P)^2
///                                       + [1 - beta^2]  sum_{P in gen l+1, P in B} mu(P)^2 )
///
/// with alpha = (mu(A) + mu(B)) / (2 mu(A)) and beta = (mu(A) + mu(B)) / (2 mu(B)).
inline double delta_q_exchange(const GenerationalSet& set, const RepulsionSchedule& schedule, const LeafMeasure& mu,
                               NodeId a, NodeId b) {
    detail::require_schedule(set, schedule);
    detail::require_leaf_vector(set, mu.size());
    detail::require_siblings(set, a, b);
    const std::vector<double> mass = node_masses(set, mu.masses());
    const double ma = mass[static_cast<std::size_t>(a)];
    const double mb = mass[static_cast<std::size_t>(b)];
    if (!(ma > 0.0) || !(mb > 0.0)) throw DomainError("mass exchange needs mu(A) > 0 and mu(B) > 0");

    // 1 - alpha^2 = (1 - alpha)(1 + alpha), factored to avoid cancellation near mu(A) = mu(B).
    const double factor_a = (ma - mb) * (3.0 * ma + mb) / (4.0 * ma * ma);
    const double factor_b = (mb - ma) * (3.0 * mb + ma) / (4.0 * mb * mb);

    const auto squares_below = [&](NodeId top, int gen) {
        std::vector<double> sq;
        for (NodeId p : set.descendants(top, gen)) {
            const double m = mass[static_cast<std::size_t>(p)];
            sq.push_back(m * m);
        }
        return pairwise_sum(sq);
    };

    const int k = set.generation(a) - 1;
    std::vector<double> terms;
    for (int l = k; l <= set.depth() - 1; ++l) {
        const double step = schedule.increment(static_cast<std::size_t>(l) + 1);
        terms.push_back(step * (factor_a * squares_below(a, l + 1) + factor_b * squares_below(b, l + 1)));
    }
    return pairwise_sum(terms);
}

/// Finest-scale reduction of the exchange delta: (r_n - r_{n-1}) (mu(A) - mu(B))^2 / 2.
inline double finest_scale_delta(double r_fine, double r_coarse, double mass_a, double mass_b) {
    const double d = mass_a - mass_b;
    return 0.5 * (r_fine - r_coarse) * d * d;
}

}  // namespace repel
