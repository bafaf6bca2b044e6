#ifndef COVERTREE_APPROX_HPP
#define COVERTREE_APPROX_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "search.hpp"

namespace covertree {

struct ApproxAnswer {
    std::vector<PointId> ids;
    std::vector<double> distances; ///< ascending
    double epsilon = 0;
    /// True when the ε-exit never fired and the answer came from the last frontier.
    bool exact_path = true;

    std::size_t size() const { return ids.size(); }
};

struct ApproxResult {
    ApproxAnswer answer;
    QueryTrace trace;
};

/**
 * (1+ε)-approximate k-NN. The descent is the exact one without its early
 * exit; instead it stops at the first level with
 * 2^(i+2)/ε + 2^(i+1) <= d(q,λ) and returns the distinctive descendants of
 * the frontier points closer than λ, topped up from the frontier points at
 * distance exactly d(q,λ) in ascending id order.
 */
template <class Space>
ApproxResult approx_knn(const CompressedCoverTree& tree, MetricSession<Space>& session,
                        typename Space::query_type q, std::size_t k, double epsilon,
                        const SearchOptions& options = {}) {
    if (!(epsilon > 0) || !std::isfinite(epsilon)) {
        throw ParameterError("epsilon must be a positive finite number; use knn_search for exact queries");
    }
    detail::require_finalized(tree);
    check_k(k, tree.size());
    const std::uint64_t before = session.evaluations();
    const bool checks = options.check_lemmas || debug_asserts_enabled();
    const auto d_k = detail::lemma_dk(options, checks, session, q, k);
    const double size_exponent = 4.0 + std::ceil(std::log2(2.0 + 1.0 / epsilon));

    ApproxResult out;
    out.answer.epsilon = epsilon;
    QueryTrace& trace = out.trace;
    detail::Descent s;
    const PointId root = tree.root();
    s.frontier.push_back({root, session.distance_to(q, root)});
    s.level = tree.max_child_level(root).value_or(tree.l_min() - 1);

    auto finish = [&](std::vector<Candidate> picked) {
        std::sort(picked.begin(), picked.end(),
                  [](const Candidate& a, const Candidate& b) { return detail::by_distance(a) < detail::by_distance(b); });
        const auto a = detail::to_answer(picked);
        out.answer.ids = a.ids;
        out.answer.distances = a.distances;
        trace.distance_evals = session.evaluations() - before;
    };

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
        if (checks) {
            detail::check_frontier_size(options, s.frontier.size(), size_exponent, i);
        }

        if (pow2(i + 2) / epsilon + pow2(i + 1) <= lambda.distance) {
            trace.special_level = i;
            out.answer.exact_path = false;
            std::vector<Candidate> closer;
            std::vector<Candidate> tied;
            for (const auto& a : s.frontier) {
                if (a.distance < lambda.distance) {
                    closer.push_back(a);
                } else if (a.distance == lambda.distance) {
                    tied.push_back(a);
                }
            }
            std::sort(tied.begin(), tied.end(), [](const Candidate& a, const Candidate& b) { return a.id < b.id; });

            std::vector<Candidate> picked;
            std::vector<PointId> ids;
            auto take = [&](const Candidate& a, bool fill) {
                ids.clear();
                collect_subtree(tree, a.id, i, ids);
                for (std::size_t x = 0; x < ids.size(); ++x) {
                    if (fill && picked.size() >= k) {
                        return;
                    }
                    picked.push_back(x == 0 ? a : Candidate{ids[x], session.distance_to(q, ids[x])});
                }
            };
            for (const auto& a : closer) {
                take(a, false);
            }
            for (const auto& a : tied) {
                if (picked.size() >= k) {
                    break;
                }
                take(a, true);
            }
            if (picked.size() != k) {
                throw InvariantError("approximate candidate set has " + std::to_string(picked.size()) +
                                     " points, expected k = " + std::to_string(k));
            }
            trace.collected = picked.size();
            finish(std::move(picked));
            return out;
        }
        s.level = detail::max_next_level(tree, s.frontier, i);
    }

    const auto best = k_smallest(std::span<const Candidate>(s.frontier), detail::by_distance, k);
    trace.collected = s.frontier.size();
    finish(best);
    return out;
}

/**
 * Certificate for the approximate answer: with both distance lists sorted
 * ascending, r_j <= (1+ε) t_j for every j.
 *
 * This is equivalent to the existence of an injection f from the answer to
 * the true neighbors with d(q,a) <= (1+ε) d(q,f(a)). If the sorted check
 * holds, pair the j-th entries. Conversely, suppose r_j > (1+ε) t_j for some
 * j. The answers r_j..r_k, k-j+1 of them, are all too far for the j true
 * neighbors t_1..t_j, so they must map into t_{j+1}..t_k, which has only
 * k-j slots.
 */
inline bool verify_approx(const ApproxAnswer& answer, const NeighborAnswer& oracle) {
    if (answer.size() != oracle.size() || answer.distances.size() != oracle.distances.size()) {
        throw ParameterError("approximate and exact answers have different k");
    }
    std::vector<double> r = answer.distances;
    std::vector<double> t = oracle.distances;
    std::sort(r.begin(), r.end());
    std::sort(t.begin(), t.end());
    for (std::size_t j = 0; j < r.size(); ++j) {
        if (!(r[j] <= (1.0 + answer.epsilon) * t[j])) {
            return false;
        }
    }
    return true;
}

} // namespace covertree

#endif
