#ifndef COVERTREE_BUILD_HPP
#define COVERTREE_BUILD_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "debug.hpp"
#include "errors.hpp"
#include "levels.hpp"
#include "metric.hpp"
#include "tree.hpp"

namespace covertree {

/// Levels visited while inserting one point, with |R_i| at each.
struct InsertionTrace {
    PointId point = 0;
    std::vector<int> levels;
    std::vector<std::size_t> frontier_sizes;
};

struct BuildTrace {
    std::vector<InsertionTrace> insertions;
    std::uint64_t distance_evals = 0;

    std::size_t max_iterations() const {
        std::size_t m = 0;
        for (const auto& ins : insertions) {
            m = std::max(m, ins.levels.size());
        }
        return m;
    }
};

struct Candidate {
    PointId id;
    double distance;
};

struct ParentChoice {
    PointId parent;
    int level;
};

/**
 * Picks the parent of a new point among every node whose distance was
 * computed during the descent. A host h is admissible when the level
 * cover_level(d(p,h)) lies below l(h) (the root is unbounded). The chosen
 * host minimizes (level, distance, id).
 *
 * Why this keeps the tree valid: let m be the smallest admissible level over
 * the whole tree and h* a host attaining it. h* is reached by the descent:
 * every ancestor a of h* at level above m satisfies d(p,a) <= 2^(l(c)+1) for
 * its child c on the path, so a survives every frontier down to m. Giving p
 * level m satisfies the cover condition by construction. For separation, any
 * q with l(q) >= m and d(p,q) <= 2^m would be an admissible host at level
 * m - 1 or lower, contradicting minimality.
 */
template <class Tree>
ParentChoice assign_parent(const Tree& tree, std::span<const Candidate> candidates) {
    if (candidates.empty()) {
        throw InvariantError("assign_parent called with an empty candidate set");
    }
    std::optional<std::tuple<int, double, PointId>> best;
    for (const auto& c : candidates) {
        const int lvl = cover_level(c.distance);
        if (c.id != tree.root() && !(lvl < tree.level(c.id))) {
            continue;
        }
        std::tuple<int, double, PointId> key{lvl, c.distance, c.id};
        if (!best || key < *best) {
            best = key;
        }
    }
    if (!best) {
        throw InvariantError("no admissible parent among the candidates");
    }
    return {std::get<2>(*best), std::get<0>(*best)};
}

namespace detail {

inline void check_separation_distance(double d, PointId p, PointId other) {
    if (!(d >= kMinSeparation)) {
        if (d == 0) {
            throw DuplicatePointError("point " + std::to_string(p) + " duplicates point " + std::to_string(other));
        }
        throw DuplicatePointError("points " + std::to_string(p) + " and " + std::to_string(other) +
                                  " are closer than the supported minimum 2^-20");
    }
}

/**
 * A node q pruned at level i (d(p,q) > 2^(i+1)) keeps every distinctive
 * descendant theta != q of S_i(q) separated from p: d(p,theta) > 2^l(theta).
 */
template <class Space>
void check_pruned_separation(const CompressedCoverTree& tree, const MetricSession<Space>& session, PointId p,
                             const std::vector<std::pair<PointId, int>>& pruned) {
    for (const auto& [q, i] : pruned) {
        for (PointId theta : collect_subtree(tree, q, i)) {
            if (theta == q || theta == p) {
                continue;
            }
            const double d = session.uncounted(p, theta);
            lemma_check(d > pow2(tree.level(theta)), "separation_of_descendants", [&] {
                return "p=" + std::to_string(p) + " q=" + std::to_string(q) + " theta=" + std::to_string(theta) +
                       " level " + std::to_string(i);
            });
        }
    }
}

} // namespace detail

/**
 * Inserts point p into the tree. The descent keeps
 * R_i = {a in C_i(R_prev) : d(p,a) <= 2^(i+1)}, where C_i(R_prev) adds the
 * level-i children of the previous frontier, and moves to the highest
 * next level among R_i. It stops when R_i is empty or the levels run out.
 * Every distance is computed once per insertion.
 */
template <class Space>
InsertionTrace add_point(CompressedCoverTree& tree, MetricSession<Space>& session, PointId p) {
    if (tree.empty()) {
        throw InvariantError("add_point needs a tree with a root");
    }
    if (p >= session.size()) {
        throw IndexError("point id " + std::to_string(p) + " out of range");
    }
    if (tree.contains(p)) {
        throw DuplicatePointError("point " + std::to_string(p) + " is already in the tree");
    }
    InsertionTrace trace;
    trace.point = p;

    std::vector<Candidate> seen;
    const PointId root = tree.root();
    const double d_root = session.distance(p, root);
    detail::check_separation_distance(d_root, p, root);
    seen.push_back({root, d_root});

    std::vector<Candidate> frontier{{root, d_root}};
    std::vector<Candidate> cover;
    const auto top = tree.max_child_level(root);
    int i = top ? *top : tree.l_min() - 1;
    const bool debug = debug_asserts_enabled();
    std::vector<std::pair<PointId, int>> pruned;

    while (!frontier.empty() && i >= tree.l_min()) {
        cover = frontier;
        for (const auto& a : frontier) {
            for (PointId c : tree.children_at(a.id, i)) {
                const double d = session.distance(p, c);
                detail::check_separation_distance(d, p, c);
                cover.push_back({c, d});
                seen.push_back({c, d});
            }
        }
        const double radius = pow2(i + 1);
        std::vector<Candidate> next;
        next.reserve(cover.size());
        for (const auto& a : cover) {
            if (a.distance <= radius) {
                next.push_back(a);
            } else if (debug) {
                pruned.emplace_back(a.id, i);
            }
        }
        trace.levels.push_back(i);
        trace.frontier_sizes.push_back(next.size());
        frontier = std::move(next);
        if (frontier.empty()) {
            break;
        }
        int j = tree.l_min() - 1;
        for (const auto& a : frontier) {
            j = std::max(j, tree.next_level(a.id, i));
        }
        i = j;
    }

    const auto choice = assign_parent(tree, std::span<const Candidate>(seen));
    tree.attach(p, choice.parent, choice.level);

    if (debug) {
        detail::check_pruned_separation(tree, session, p, pruned);
    }
    return trace;
}

enum class RootPolicy { first, index, seeded };

struct RootChoice {
    RootPolicy policy = RootPolicy::first;
    PointId index = 0;
    std::uint64_t seed = 0;
};

inline PointId resolve_root(const RootChoice& choice, std::size_t n) {
    switch (choice.policy) {
    case RootPolicy::first: return 0;
    case RootPolicy::index:
        if (choice.index >= n) {
            throw ParameterError("root index " + std::to_string(choice.index) + " out of range");
        }
        return choice.index;
    case RootPolicy::seeded: {
        std::mt19937_64 rng(choice.seed);
        return static_cast<PointId>(rng() % n);
    }
    }
    return 0;
}

struct BuildResult {
    CompressedCoverTree tree;
    BuildTrace trace;
};

/**
 * Builds the tree over every point of the session: the chosen root first,
 * then the remaining ids in ascending order. Distinctive-descendant counts
 * are filled once at the end.
 */
template <class Space>
BuildResult build(MetricSession<Space>& session, const RootChoice& root_choice = {}) {
    const std::size_t n = session.size();
    if (n == 0) {
        throw DegenerateInputError("cannot build a tree over an empty dataset");
    }
    const std::uint64_t before = session.evaluations();
    const PointId root = resolve_root(root_choice, n);
    BuildResult out{CompressedCoverTree(root, 0), {}};
    out.trace.insertions.reserve(n - 1);
    for (PointId p = 0; p < n; ++p) {
        if (p != root) {
            out.trace.insertions.push_back(add_point(out.tree, session, p));
        }
    }
    out.tree.compute_distinctive_counts();
    out.trace.distance_evals = session.evaluations() - before;
    return out;
}

struct BoundCheck {
    double bound = 0;
    std::size_t observed = 0;
    std::vector<PointId> violators;

    bool ok() const { return violators.empty(); }
};

/// |L(T(W),p)| <= 12 c(R)^2 log2|R| for every insertion.
inline BoundCheck construction_iteration_bound_check(const BuildTrace& trace, std::size_t n, double c) {
    BoundCheck out;
    out.bound = n > 1 ? 12.0 * c * c * std::log2(static_cast<double>(n)) : 1.0;
    for (const auto& ins : trace.insertions) {
        out.observed = std::max(out.observed, ins.levels.size());
        if (static_cast<double>(ins.levels.size()) > out.bound) {
            out.violators.push_back(ins.point);
        }
    }
    return out;
}

} // namespace covertree

#endif
