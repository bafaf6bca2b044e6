#ifndef COVERTREE_SEARCH_HPP
#define COVERTREE_SEARCH_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "build.hpp"
#include "debug.hpp"
#include "errors.hpp"
#include "k_smallest.hpp"
#include "levels.hpp"
#include "metric.hpp"
#include "tree.hpp"

namespace covertree {

/// Iterations of one query: L(T(R),q) and the sets seen at each level.
struct QueryTrace {
    std::vector<int> levels;
    std::vector<std::size_t> frontier_sizes; ///< |R_i|
    std::vector<std::size_t> cover_sizes;    ///< |C_i(R_prev)|
    std::optional<int> special_level;
    std::uint64_t distance_evals = 0;
    std::size_t collected = 0;

    std::size_t iterations() const { return levels.size(); }
};

struct SearchResult {
    NeighborAnswer answer;
    QueryTrace trace;
};

/**
 * Inputs for the lemma assertions. When assertions are on and d_k is not
 * supplied it is recomputed with uncounted distances; the frontier-size check
 * only runs when c is supplied.
 */
struct SearchOptions {
    std::optional<double> d_k;
    std::optional<double> c;
    bool check_lemmas = false;
    /// Called with (i, R_i) after each level is filtered.
    std::function<void(int, std::span<const Candidate>)> observer;
};

struct LambdaPoint {
    PointId id;
    double distance;
};

namespace detail {

inline std::pair<double, PointId> by_distance(const Candidate& c) { return {c.distance, c.id}; }

template <class Space>
double oracle_dk(const MetricSession<Space>& session, typename Space::query_type q, std::size_t k) {
    std::vector<double> d(session.size());
    for (PointId i = 0; i < d.size(); ++i) {
        d[i] = session.uncounted_to(q, i);
    }
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k - 1), d.end());
    return d[k - 1];
}

template <class Space>
std::optional<double> lemma_dk(const SearchOptions& options, bool checks, const MetricSession<Space>& session,
                               typename Space::query_type q, std::size_t k) {
    if (!checks) {
        return std::nullopt;
    }
    if (options.d_k) {
        return options.d_k;
    }
    return oracle_dk(session, q, k);
}

inline std::string level_text(int i, double value) {
    return "level " + std::to_string(i) + " value " + std::to_string(value);
}

inline void check_beta_point(std::optional<double> d_k, double d_lambda, int i) {
    if (d_k) {
        lemma_check(d_lambda <= *d_k + pow2(i + 1), "beta_point", [&] { return level_text(i, d_lambda); });
    }
}

inline void check_frontier_size(const SearchOptions& options, std::size_t size, double exponent, int i) {
    if (options.c) {
        const double bound = std::pow(*options.c, exponent);
        lemma_check(static_cast<double>(size) <= bound, "frontier_size",
                    [&] { return level_text(i, static_cast<double>(size)); });
    }
}

} // namespace detail

/**
 * The λ-point of C at level i: take the k nearest candidates by (distance,
 * id) and return the first whose running total of |S_i(p)| reaches k.
 */
inline LambdaPoint lambda_point(const CompressedCoverTree& tree, std::span<const Candidate> cover, int i,
                                std::size_t k) {
    const auto nearest = k_smallest(cover, detail::by_distance, k);
    std::size_t total = 0;
    for (const auto& c : nearest) {
        total += tree.distinctive_count(c.id, i);
        if (total >= k) {
            return {c.id, c.distance};
        }
    }
    throw InvariantError("λ-point undefined at level " + std::to_string(i) + ": distinctive counts sum to " +
                         std::to_string(total) + " < k = " + std::to_string(k));
}

namespace detail {

struct Descent {
    std::vector<Candidate> frontier;
    std::vector<Candidate> cover;
    int level = 0;
};

/// C_i(R) = R plus the level-i children of R, with distances to q.
template <class Space>
void expand_cover(const CompressedCoverTree& tree, MetricSession<Space>& session, typename Space::query_type q,
                  Descent& s) {
    s.cover = s.frontier;
    for (const auto& a : s.frontier) {
        for (PointId c : tree.children_at(a.id, s.level)) {
            s.cover.push_back({c, session.distance_to(q, c)});
        }
    }
}

inline int max_next_level(const CompressedCoverTree& tree, std::span<const Candidate> frontier, int i) {
    int j = tree.l_min() - 1;
    for (const auto& a : frontier) {
        j = std::max(j, tree.next_level(a.id, i));
    }
    return j;
}

inline NeighborAnswer to_answer(std::span<const Candidate> sorted) {
    NeighborAnswer out;
    out.ids.reserve(sorted.size());
    out.distances.reserve(sorted.size());
    for (const auto& c : sorted) {
        out.ids.push_back(c.id);
        out.distances.push_back(c.distance);
    }
    return out;
}

inline void require_finalized(const CompressedCoverTree& tree) {
    if (tree.empty()) {
        throw InvariantError("search on an empty tree");
    }
    if (!tree.has_distinctive_counts()) {
        throw InvariantError("search needs distinctive descendant counts; call compute_distinctive_counts()");
    }
}

} // namespace detail

/**
 * Exact k-NN descent. At level i the frontier keeps the candidates within
 * d(q,λ) + 2^(i+2). Once d(q,λ) > 2^(i+2) the answer lies inside the
 * distinctive descendants of the frontier, which are collected and ranked
 * directly. Pruned points are strictly farther than d_k, so the output
 * equals the exhaustive answer including the id tie-rule.
 */
template <class Space>
SearchResult knn_search(const CompressedCoverTree& tree, MetricSession<Space>& session,
                        typename Space::query_type q, std::size_t k, const SearchOptions& options = {}) {
    detail::require_finalized(tree);
    check_k(k, tree.size());
    const std::uint64_t before = session.evaluations();
    const bool checks = options.check_lemmas || debug_asserts_enabled();
    const auto d_k = detail::lemma_dk(options, checks, session, q, k);

    SearchResult out;
    QueryTrace& trace = out.trace;
    detail::Descent s;
    const PointId root = tree.root();
    s.frontier.push_back({root, session.distance_to(q, root)});
    s.level = tree.max_child_level(root).value_or(tree.l_min() - 1);

    while (s.level >= tree.l_min()) {
        const int i = s.level;
        detail::expand_cover(tree, session, q, s);
        const LambdaPoint lambda = lambda_point(tree, s.cover, i, k);
        if (checks) {
            detail::check_beta_point(d_k, lambda.distance, i);
        }

        const double keep = lambda.distance + pow2(i + 2);
        std::vector<Candidate> next;
        next.reserve(s.cover.size());
        for (const auto& a : s.cover) {
            if (a.distance <= keep) {
                next.push_back(a);
            } else if (checks) {
                lemma_check(a.distance > pow2(i + 2), "pruned_lower_bound",
                            [&] { return detail::level_text(i, a.distance); });
            }
        }
        trace.levels.push_back(i);
        trace.cover_sizes.push_back(s.cover.size());
        trace.frontier_sizes.push_back(next.size());
        s.frontier = std::move(next);
        if (options.observer) {
            options.observer(i, s.frontier);
        }

        if (lambda.distance > pow2(i + 2)) {
            trace.special_level = i;
            std::vector<Candidate> collected;
            std::vector<PointId> ids;
            for (const auto& a : s.frontier) {
                ids.clear();
                collect_subtree(tree, a.id, i, ids);
                collected.push_back(a);
                for (std::size_t x = 1; x < ids.size(); ++x) {
                    collected.push_back({ids[x], session.distance_to(q, ids[x])});
                }
            }
            trace.collected = collected.size();
            if (checks && d_k) {
                for (const auto& c : collected) {
                    lemma_check(c.distance <= 5 * *d_k, "collected_locality",
                                [&] { return detail::level_text(i, c.distance); });
                }
            }
            const auto best = k_smallest(std::span<const Candidate>(collected), detail::by_distance, k);
            out.answer = detail::to_answer(best);
            trace.distance_evals = session.evaluations() - before;
            return out;
        }

        if (checks) {
            for (const auto& a : s.frontier) {
                lemma_check(a.distance <= pow2(i + 3), "frontier_radius",
                            [&] { return detail::level_text(i, a.distance); });
            }
            detail::check_frontier_size(options, s.frontier.size(), 6.0, i);
        }
        s.level = detail::max_next_level(tree, s.frontier, i);
    }

    const auto best = k_smallest(std::span<const Candidate>(s.frontier), detail::by_distance, k);
    if (best.size() < k) {
        throw InvariantError("final frontier holds fewer than k points");
    }
    trace.collected = s.frontier.size();
    out.answer = detail::to_answer(best);
    trace.distance_evals = session.evaluations() - before;
    return out;
}

/// |L(T(R),q)| <= 20 c(R ∪ {q})^2 log2|R|, one c per trace.
inline BoundCheck knn_iteration_bound_check(std::span<const QueryTrace> traces, std::span<const double> c_with_query,
                                            std::size_t n) {
    if (traces.size() != c_with_query.size()) {
        throw ParameterError("one expansion constant per trace is required");
    }
    BoundCheck out;
    const double log_n = n > 1 ? std::log2(static_cast<double>(n)) : 0.0;
    for (std::size_t t = 0; t < traces.size(); ++t) {
        const double c = c_with_query[t];
        // |R| = 1 has log2|R| = 0; a single iteration is the trivial bound there.
        const double bound = n > 1 ? 20.0 * c * c * log_n : 1.0;
        out.bound = std::max(out.bound, bound);
        out.observed = std::max(out.observed, traces[t].iterations());
        if (static_cast<double>(traces[t].iterations()) > bound) {
            out.violators.push_back(t);
        }
    }
    return out;
}

} // namespace covertree

#endif
