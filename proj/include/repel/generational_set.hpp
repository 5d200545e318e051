#pragma once

// Sets with the filtration property, stored as explicit generation trees.
//
// Node numbering is breadth-first by generation, then by parent order. Two
// consequences are used throughout the library:
//   - every generation occupies a contiguous id block, so the leaves
//     (generation n) are the last block and leaf index = id - leaf_begin();
//   - the descendants of any node at any later generation form a contiguous
//     id block, so subtree sums are range sums.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <ranges>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "repel/errors.hpp"
#include "repel/numeric.hpp"

namespace repel {

using NodeId = int;
inline constexpr NodeId kNoParent = -1;

using IdRange = std::ranges::iota_view<NodeId, NodeId>;

/// Axis-aligned square: center and half of the sidelength.
struct Box {
    double cx = 0.0;
    double cy = 0.0;
    double hw = 0.0;

    double side() const { return 2.0 * hw; }
    double diameter() const { return side() * std::sqrt(2.0); }

    bool operator==(const Box&) const = default;
};

/// Euclidean distance between two closed squares (zero if they touch or overlap).
inline double box_distance(const Box& a, const Box& b) {
    const double gx = std::max(0.0, std::abs(a.cx - b.cx) - a.hw - b.hw);
    const double gy = std::max(0.0, std::abs(a.cy - b.cy) - a.hw - b.hw);
    return std::hypot(gx, gy);
}

inline bool box_contains(const Box& outer, const Box& inner) {
    const double slack = 1e-12 * outer.hw;
    return inner.cx - inner.hw >= outer.cx - outer.hw - slack &&
           inner.cx + inner.hw <= outer.cx + outer.hw + slack &&
           inner.cy - inner.hw >= outer.cy - outer.hw - slack &&
           inner.cy + inner.hw <= outer.cy + outer.hw + slack;
}

/// True when the open interiors intersect. Boxes sharing only an edge do not overlap.
inline bool box_interiors_overlap(const Box& a, const Box& b) {
    const double slack = 1e-12 * std::min(a.hw, b.hw);
    return std::abs(a.cx - b.cx) < a.hw + b.hw - slack &&
           std::abs(a.cy - b.cy) < a.hw + b.hw - slack;
}

/// Number of children of every generation-l node, l = 0..n-1.
class BranchingProfile {
public:
    BranchingProfile() = default;
    explicit BranchingProfile(std::vector<std::size_t> counts) : counts_(std::move(counts)) {
        for (std::size_t c : counts_) {
            if (c == 0) {
                throw DomainError(
                    "branching profile entries must be >= 1; express termination by "
                    "shortening the profile");
            }
        }
    }

    std::size_t depth() const { return counts_.size(); }
    std::size_t operator[](std::size_t generation) const { return counts_.at(generation); }
    const std::vector<std::size_t>& counts() const { return counts_; }

    std::size_t leaf_count() const {
        std::size_t m = 1;
        for (std::size_t c : counts_) m *= c;
        return m;
    }

    bool operator==(const BranchingProfile&) const = default;

private:
    std::vector<std::size_t> counts_;
};

/// Strictly increasing positive sequence r_0 < r_1 < ... < r_n.
class RepulsionSchedule {
public:
    explicit RepulsionSchedule(std::vector<double> values) : values_(std::move(values)) {
        if (values_.empty()) throw DomainError("repulsion schedule must have at least one entry");
        if (!(values_.front() > 0.0) || !std::isfinite(values_.front())) {
            throw DomainError("repulsion schedule entries must be positive and finite");
        }
        for (std::size_t l = 1; l < values_.size(); ++l) {
            if (!(values_[l] > values_[l - 1]) || !std::isfinite(values_[l])) {
                throw DomainError("repulsion schedule must be strictly increasing (entry " +
                                  std::to_string(l) + ")");
            }
        }
    }

    /// r_l = 4^l for l = 0..n, the natural schedule of the four-corner Cantor set.
    static RepulsionSchedule cantor(int n) {
        if (n < 0) throw DomainError("cantor schedule needs n >= 0");
        std::vector<double> v(static_cast<std::size_t>(n) + 1);
        for (std::size_t l = 0; l < v.size(); ++l) v[l] = std::ldexp(1.0, 2 * static_cast<int>(l));
        return RepulsionSchedule(std::move(v));
    }

    std::size_t size() const { return values_.size(); }
    int depth() const { return static_cast<int>(values_.size()) - 1; }
    double operator[](std::size_t l) const { return values_[l]; }
    std::span<const double> values() const { return values_; }

    /// r_0 for l = 0, r_l - r_{l-1} otherwise. All entries are positive.
    double increment(std::size_t l) const { return l == 0 ? values_[0] : values_[l] - values_[l - 1]; }

private:
    std::vector<double> values_;
};

/// Probability masses on the generation-n constituents, indexed by leaf index.
class LeafMeasure {
public:
    static constexpr double kSumTolerance = 1e-12;

    explicit LeafMeasure(std::vector<double> masses) : masses_(std::move(masses)) {
        if (masses_.empty()) throw DomainError("leaf measure must be non-empty");
        for (double m : masses_) {
            if (!(m >= 0.0) || !std::isfinite(m)) {
                throw DomainError("leaf masses must be finite and nonnegative");
            }
        }
        const double total = pairwise_sum(masses_);
        if (std::abs(total - 1.0) > kSumTolerance) {
            throw DomainError("leaf masses must sum to 1 (got " + std::to_string(total) + ")");
        }
    }

    /// Scales nonnegative weights to unit total.
    static LeafMeasure normalized(std::vector<double> weights) {
        const double total = pairwise_sum(weights);
        if (!(total > 0.0)) throw DomainError("cannot normalize weights with zero total");
        for (double& w : weights) w /= total;
        return LeafMeasure(std::move(weights));
    }

    static LeafMeasure equidistributed(std::size_t leaves) {
        if (leaves == 0) throw DomainError("leaf measure must be non-empty");
        return LeafMeasure(std::vector<double>(leaves, 1.0 / static_cast<double>(leaves)));
    }

    static LeafMeasure point_mass(std::size_t leaves, std::size_t at) {
        if (at >= leaves) throw DomainError("point mass index out of range");
        std::vector<double> m(leaves, 0.0);
        m[at] = 1.0;
        return LeafMeasure(std::move(m));
    }

    std::size_t size() const { return masses_.size(); }
    double operator[](std::size_t i) const { return masses_[i]; }
    std::span<const double> masses() const { return masses_; }

private:
    std::vector<double> masses_;
};

/// Child box as a function of the parent box, the child's position among its
/// siblings, and the sibling count.
struct Placer {
    Box root;
    std::function<Box(const Box& parent, std::size_t index, std::size_t count)> place;
};

/// Keeps the four corner squares of sidelength 1/4 of the parent, ordered
/// lower-left, lower-right, upper-left, upper-right. Root is [0,1]^2.
inline Placer corner_placer() {
    return Placer{Box{0.5, 0.5, 0.5}, [](const Box& parent, std::size_t index, std::size_t count) {
                      if (count > 4) throw DomainError("corner placer supports at most 4 children");
                      const double hw = parent.hw / 4.0;
                      const double off = parent.hw - hw;
                      const double sx = (index % 2 == 0) ? -1.0 : 1.0;
                      const double sy = (index / 2 == 0) ? -1.0 : 1.0;
                      return Box{parent.cx + sx * off, parent.cy + sy * off, hw};
                  }};
}

/// Raw node record, the shape of the JSON set format.
struct NodeRecord {
    NodeId id = 0;
    int gen = 0;
    NodeId parent = kNoParent;
    std::vector<NodeId> children;
    std::optional<Box> box;

    bool operator==(const NodeRecord&) const = default;
};

class GenerationalSet {
public:
    /// Validates and adopts a node list given in canonical breadth-first layout.
    static GenerationalSet from_records(int n, const std::vector<NodeRecord>& records) {
        if (n < 0) throw DomainError("deepest generation must be >= 0");
        if (records.empty()) throw DomainError("set has no nodes");
        const auto total = static_cast<NodeId>(records.size());

        std::vector<const NodeRecord*> by_id(records.size(), nullptr);
        for (const NodeRecord& rec : records) {
            if (rec.id < 0 || rec.id >= total) {
                throw DomainError("node id " + std::to_string(rec.id) + " outside 0.." +
                                  std::to_string(total - 1));
            }
            if (by_id[rec.id] != nullptr) throw DomainError("duplicate node id " + std::to_string(rec.id));
            by_id[rec.id] = &rec;
        }

        const bool geometric = records.front().box.has_value();
        GenerationalSet set;
        set.n_ = n;
        set.generation_.resize(records.size());
        set.parent_.resize(records.size());
        set.first_child_.assign(records.size(), 0);
        set.child_count_.assign(records.size(), 0);
        if (geometric) set.boxes_.emplace(records.size());

        for (NodeId id = 0; id < total; ++id) {
            const NodeRecord& rec = *by_id[id];
            if (rec.gen < 0 || rec.gen > n) {
                throw DomainError("node " + std::to_string(id) + " has unknown generation " +
                                  std::to_string(rec.gen));
            }
            if (rec.box.has_value() != geometric) {
                throw DomainError("geometry must be present on all nodes or on none");
            }
            set.generation_[id] = rec.gen;
            set.parent_[id] = rec.parent;
            if (geometric) (*set.boxes_)[id] = *rec.box;
        }

        // Canonical layout: generations nondecreasing in id, a single root,
        // parents nondecreasing within each generation block.
        if (set.generation_[0] != 0 || set.parent_[0] != kNoParent) throw DomainError("node 0 must be the root");
        for (NodeId id = 1; id < total; ++id) {
            const int g = set.generation_[id];
            if (g < set.generation_[id - 1]) throw DomainError("node ids are not ordered by generation");
            if (g == 0) throw DomainError("set must have exactly one generation-0 node");
            const NodeId p = set.parent_[id];
            if (p < 0 || p >= total) {
                throw DomainError("node " + std::to_string(id) + " has dangling parent id");
            }
            if (set.generation_[p] != g - 1) {
                throw DomainError("parent of node " + std::to_string(id) + " is not one generation up");
            }
            if (set.generation_[id - 1] == g && set.parent_[id - 1] > p) {
                throw DomainError("node ids are not in canonical breadth-first layout");
            }
        }
        for (NodeId id = 1; id < total; ++id) {
            const NodeId p = set.parent_[id];
            if (set.child_count_[p] == 0) set.first_child_[p] = id;
            ++set.child_count_[p];
        }
        for (NodeId id = 0; id < total; ++id) {
            const std::vector<NodeId>& listed = by_id[id]->children;
            if (listed.size() != set.child_count_[id]) {
                throw DomainError("children of node " + std::to_string(id) + " disagree with parent links");
            }
            for (std::size_t k = 0; k < listed.size(); ++k) {
                if (listed[k] != set.first_child_[id] + static_cast<NodeId>(k)) {
                    throw DomainError("children of node " + std::to_string(id) +
                                      " are not listed in canonical order");
                }
            }
        }
        set.finish_layout();
        if (geometric) set.validate_geometry();
        return set;
    }

    /// Deepest generation index n.
    int depth() const { return n_; }
    std::size_t node_count() const { return generation_.size(); }
    std::size_t leaf_count() const { return generation_.size() - static_cast<std::size_t>(leaf_begin()); }
    NodeId leaf_begin() const { return generation_begin_[n_]; }

    int generation(NodeId id) const { return generation_.at(id); }
    NodeId parent(NodeId id) const { return parent_.at(id); }
    IdRange children(NodeId id) const {
        const NodeId first = first_child_.at(id);
        return IdRange(first, first + static_cast<NodeId>(child_count_[id]));
    }
    std::size_t child_count(NodeId id) const { return child_count_.at(id); }
    IdRange generation_nodes(int gen) const {
        return IdRange(generation_begin_.at(gen), generation_begin_.at(gen + 1));
    }

    bool is_leaf(NodeId id) const { return id >= leaf_begin() && id < static_cast<NodeId>(node_count()); }
    std::size_t leaf_index(NodeId id) const {
        if (!is_leaf(id)) throw DomainError("node " + std::to_string(id) + " is not a leaf");
        return static_cast<std::size_t>(id - leaf_begin());
    }
    NodeId leaf_node(std::size_t index) const { return leaf_begin() + static_cast<NodeId>(index); }

    /// Descendants of `id` at generation `gen` (>= generation(id)), as an id block.
    IdRange descendants(NodeId id, int gen) const {
        if (gen < generation(id) || gen > n_) throw DomainError("descendant generation out of range");
        NodeId lo = id;
        NodeId hi = id + 1;
        for (int g = generation(id); g < gen; ++g) {
            const NodeId last = hi - 1;
            lo = first_child_[lo];
            hi = first_child_[last] + static_cast<NodeId>(child_count_[last]);
        }
        return IdRange(lo, hi);
    }

    /// Leaf indices [first, second) below `id`.
    std::pair<std::size_t, std::size_t> leaf_span(NodeId id) const {
        const IdRange r = descendants(id, n_);
        return {static_cast<std::size_t>(*r.begin() - leaf_begin()),
                static_cast<std::size_t>(*r.end() - leaf_begin())};
    }

    NodeId ancestor(NodeId id, int gen) const {
        if (gen < 0 || gen > generation(id)) throw DomainError("ancestor generation out of range");
        while (generation_[id] > gen) id = parent_[id];
        return id;
    }

    bool has_geometry() const { return boxes_.has_value(); }
    const Box& box(NodeId id) const {
        if (!boxes_) throw DomainError("set has no geometry");
        return boxes_->at(id);
    }

    /// Common child count per generation, if every node of each generation agrees.
    std::optional<BranchingProfile> socialist_profile() const {
        std::vector<std::size_t> counts;
        for (int g = 0; g < n_; ++g) {
            const IdRange nodes = generation_nodes(g);
            const std::size_t c = child_count_[*nodes.begin()];
            for (NodeId id : nodes) {
                if (child_count_[id] != c) return std::nullopt;
            }
            counts.push_back(c);
        }
        return BranchingProfile(std::move(counts));
    }
    bool is_socialist() const { return socialist_profile().has_value(); }

    std::vector<NodeRecord> records() const {
        std::vector<NodeRecord> out(node_count());
        for (NodeId id = 0; id < static_cast<NodeId>(node_count()); ++id) {
            NodeRecord& rec = out[id];
            rec.id = id;
            rec.gen = generation_[id];
            rec.parent = parent_[id];
            for (NodeId c : children(id)) rec.children.push_back(c);
            if (boxes_) rec.box = (*boxes_)[id];
        }
        return out;
    }

    /// Grows a breadth-first tree; `count(node, generation)` gives each node's child count.
    template <typename ChildCount>
    static GenerationalSet grow(int n, ChildCount&& count, const Placer* placer) {
        GenerationalSet set;
        set.n_ = n;
        set.generation_.push_back(0);
        set.parent_.push_back(kNoParent);
        set.first_child_.push_back(0);
        set.child_count_.push_back(0);
        if (placer) set.boxes_.emplace(1, placer->root);
        NodeId gen_lo = 0;
        for (int g = 0; g < n; ++g) {
            const NodeId gen_hi = static_cast<NodeId>(set.generation_.size());
            for (NodeId id = gen_lo; id < gen_hi; ++id) {
                const std::size_t c = count(id, g);
                if (c == 0) throw DomainError("internal nodes must have at least one child");
                set.first_child_[id] = static_cast<NodeId>(set.generation_.size());
                set.child_count_[id] = c;
                for (std::size_t k = 0; k < c; ++k) {
                    set.generation_.push_back(g + 1);
                    set.parent_.push_back(id);
                    set.first_child_.push_back(0);
                    set.child_count_.push_back(0);
                    if (placer) set.boxes_->push_back(placer->place((*set.boxes_)[id], k, c));
                }
            }
            gen_lo = gen_hi;
        }
        set.finish_layout();
        if (placer) set.validate_geometry();
        return set;
    }

private:
    GenerationalSet() = default;

    void finish_layout() {
        generation_begin_.assign(static_cast<std::size_t>(n_) + 2, 0);
        for (int g : generation_) ++generation_begin_[g + 1];
        for (std::size_t g = 1; g < generation_begin_.size(); ++g) generation_begin_[g] += generation_begin_[g - 1];
        for (int g = 0; g < n_; ++g) {
            for (NodeId id : generation_nodes(g)) {
                if (child_count_[id] == 0) {
                    throw DomainError("node " + std::to_string(id) + " at generation " + std::to_string(g) +
                                      " has no children; leaves must all be at generation n");
                }
            }
        }
    }

    void validate_geometry() const {
        const std::vector<Box>& b = *boxes_;
        for (NodeId id = 0; id < static_cast<NodeId>(node_count()); ++id) {
            if (!(b[id].hw > 0.0) || !std::isfinite(b[id].hw) || !std::isfinite(b[id].cx) ||
                !std::isfinite(b[id].cy)) {
                throw GeometryError("node " + std::to_string(id) + " has a degenerate box", id, id);
            }
            const IdRange kids = children(id);
            for (NodeId c : kids) {
                if (!box_contains(b[id], b[c])) {
                    throw GeometryError("box of node " + std::to_string(c) + " is not contained in parent " +
                                            std::to_string(id),
                                        id, c);
                }
                for (NodeId d = c + 1; d < *kids.end(); ++d) {
                    if (box_interiors_overlap(b[c], b[d])) {
                        throw GeometryError(
                            "sibling boxes " + std::to_string(c) + " and " + std::to_string(d) + " overlap", c, d);
                    }
                }
            }
        }
    }

    int n_ = 0;
    std::vector<int> generation_;
    std::vector<NodeId> parent_;
    std::vector<NodeId> first_child_;
    std::vector<std::size_t> child_count_;
    std::vector<NodeId> generation_begin_;
    std::optional<std::vector<Box>> boxes_;
};

/// Tree in which every generation-l node has exactly profile[l] children.
inline GenerationalSet build_socialist(const BranchingProfile& profile,
                                       const std::optional<Placer>& placer = std::nullopt) {
    if (profile.depth() == 0) throw DomainError("branching profile must be non-empty");
    return GenerationalSet::grow(
        static_cast<int>(profile.depth()),
        [&](NodeId, int gen) { return profile[static_cast<std::size_t>(gen)]; },
        placer ? &*placer : nullptr);
}

/// Generation n of the four-corner Cantor set on [0,1]^2.
inline GenerationalSet build_cantor(int n) {
    if (n < 0 || n > 10) throw DomainError("cantor generation must be in 0..10");
    const Placer placer = corner_placer();
    return GenerationalSet::grow(n, [](NodeId, int) { return std::size_t{4}; }, &placer);
}

/// Seeded combinatorial tree, child counts uniform on 1..max_children.
inline GenerationalSet build_random_filtration(int n, std::size_t max_children, std::uint64_t seed) {
    if (n < 1) throw DomainError("random filtration needs n >= 1");
    if (max_children < 1) throw DomainError("random filtration needs max_children >= 1");
    Rng rng(seed);
    return GenerationalSet::grow(n, [&](NodeId, int) { return rng.one_to(max_children); }, nullptr);
}

/// Largest l with identical generation-l ancestors; n when the leaves coincide.
inline int last_common_generation(const GenerationalSet& set, NodeId leaf_a, NodeId leaf_b) {
    if (!set.is_leaf(leaf_a) || !set.is_leaf(leaf_b)) {
        throw DomainError("last_common_generation expects leaf ids");
    }
    int gen = set.depth();
    while (leaf_a != leaf_b) {
        leaf_a = set.parent(leaf_a);
        leaf_b = set.parent(leaf_b);
        --gen;
    }
    return gen;
}

struct EvenDistributionReport {
    // Clause (a): C^-1 r_k <= diam(A)^-1 <= C r_k. The factor for a node is
    // max(r_k diam, 1 / (r_k diam)); the clause holds iff the worst factor <= C.
    bool diameter_ok = true;
    double worst_diameter_factor = 1.0;
    NodeId worst_diameter_node = 0;

    // Clause (b): dist(A, B) >= eps / r_k for distinct siblings at generation k.
    // Stored as the smallest r_k * dist over all sibling pairs.
    bool separation_ok = true;
    double worst_separation = std::numeric_limits<double>::infinity();
    std::pair<NodeId, NodeId> worst_separation_pair{-1, -1};

    bool passed() const { return diameter_ok && separation_ok; }
};

inline EvenDistributionReport validate_even_distribution(const GenerationalSet& set,
                                                         const RepulsionSchedule& schedule, double c,
                                                         double eps) {
    if (!set.has_geometry()) throw DomainError("even distribution needs geometry");
    if (static_cast<int>(schedule.size()) != set.depth() + 1) {
        throw DomainError("schedule length must be n + 1");
    }
    if (!(c >= 1.0)) throw DomainError("even distribution constant C must be >= 1");
    if (!(eps > 0.0)) throw DomainError("separation constant eps must be positive");

    EvenDistributionReport report;
    for (int k = 0; k <= set.depth(); ++k) {
        const double rk = schedule[static_cast<std::size_t>(k)];
        for (NodeId id : set.generation_nodes(k)) {
            const double scaled = rk * set.box(id).diameter();
            const double factor = std::max(scaled, 1.0 / scaled);
            if (factor > report.worst_diameter_factor) {
                report.worst_diameter_factor = factor;
                report.worst_diameter_node = id;
            }
        }
        if (k == 0) continue;
        for (NodeId p : set.generation_nodes(k - 1)) {
            const IdRange kids = set.children(p);
            for (NodeId a : kids) {
                for (NodeId b = a + 1; b < *kids.end(); ++b) {
                    const double sep = rk * box_distance(set.box(a), set.box(b));
                    if (sep < report.worst_separation) {
                        report.worst_separation = sep;
                        report.worst_separation_pair = {a, b};
                    }
                }
            }
        }
    }
    report.diameter_ok = report.worst_diameter_factor <= c;
    report.separation_ok = report.worst_separation >= eps;
    return report;
}

}  // namespace repel
