#ifndef COVERTREE_TESTS_SUPPORT_HPP
#define COVERTREE_TESTS_SUPPORT_HPP

// Independent oracles and fixtures shared by the test binaries. Nothing here
// calls into the library's own search or counting code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "covertree/covertree.hpp"

namespace testing_support {

using covertree::PointId;
using covertree::PointSet;

inline PointSet line(const std::vector<double>& xs) {
    PointSet out(1);
    for (double x : xs) {
        out.push_back(std::vector<double>{x});
    }
    return out;
}

inline PointSet line_range(int lo, int hi) {
    std::vector<double> xs;
    for (int x = lo; x <= hi; ++x) {
        xs.push_back(x);
    }
    return line(xs);
}

/// Plain formula, independent of coordinate_distance.
inline double norm_distance(covertree::MetricKind kind, std::span<const double> a, std::span<const double> b) {
    double acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = std::fabs(a[i] - b[i]);
        switch (kind) {
        case covertree::MetricKind::euclidean: acc += d * d; break;
        case covertree::MetricKind::manhattan: acc += d; break;
        case covertree::MetricKind::chebyshev: acc = std::max(acc, d); break;
        }
    }
    return kind == covertree::MetricKind::euclidean ? std::sqrt(acc) : acc;
}

/// Full stable sort of (distance, id); returns the first k.
inline std::vector<std::pair<double, PointId>> oracle_knn(const covertree::CoordinateSpace& space,
                                                          std::span<const double> q, std::size_t k) {
    std::vector<std::pair<double, PointId>> all;
    for (PointId i = 0; i < space.size(); ++i) {
        all.emplace_back(space.distance_to(q, i), i);
    }
    std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    all.resize(k);
    return all;
}

/// Exhaustive |B(p,2t)|/|B(p,t)| over every breakpoint, triple loop.
inline double oracle_expansion(const std::vector<std::vector<double>>& dist) {
    const std::size_t n = dist.size();
    double best = 1;
    for (std::size_t p = 0; p < n; ++p) {
        std::vector<double> radii;
        for (std::size_t r = 0; r < n; ++r) {
            radii.push_back(dist[p][r]);
            radii.push_back(dist[p][r] / 2);
        }
        for (double t : radii) {
            std::size_t inner = 0;
            std::size_t outer = 0;
            for (std::size_t r = 0; r < n; ++r) {
                inner += dist[p][r] <= t;
                outer += dist[p][r] <= 2 * t;
            }
            best = std::max(best, static_cast<double>(outer) / static_cast<double>(inner));
        }
    }
    return std::max(2.0, best);
}

inline std::vector<std::vector<double>> distance_matrix(const covertree::CoordinateSpace& space) {
    std::vector<std::vector<double>> d(space.size(), std::vector<double>(space.size()));
    for (PointId a = 0; a < space.size(); ++a) {
        for (PointId b = 0; b < space.size(); ++b) {
            d[a][b] = space.distance(a, b);
        }
    }
    return d;
}

/// Points with small integer coordinates so distances are exact and ties common.
inline PointSet random_grid_points(std::size_t n, std::size_t dim, std::uint64_t seed, int span = 20) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> u(0, span);
    std::set<std::vector<double>> seen;
    PointSet out(dim);
    std::size_t guard = 0;
    while (out.size() < n && guard++ < 100 * n + 1000) {
        std::vector<double> p(dim);
        for (auto& x : p) {
            x = u(rng);
        }
        if (seen.insert(p).second) {
            out.push_back(p);
        }
    }
    return out;
}

inline PointSet random_real_points(std::size_t n, std::size_t dim, std::uint64_t seed) {
    return covertree::deduplicate(covertree::uniform_points(n, dim, seed)).points;
}

/**
 * The worked 15-point example on the line, with point value v at id v-1.
 * Root 8 at level 2; 4, 12 at level 1; 2, 6, 10, 14 at level 0; odd values
 * at level -1.
 */
inline covertree::CompressedCoverTree big_example_tree() {
    using covertree::NodeRecord;
    auto id = [](int v) { return static_cast<PointId>(v - 1); };
    std::vector<NodeRecord> r;
    r.push_back({id(8), 2, std::nullopt});
    r.push_back({id(4), 1, id(8)});
    r.push_back({id(12), 1, id(8)});
    r.push_back({id(2), 0, id(4)});
    r.push_back({id(6), 0, id(4)});
    r.push_back({id(10), 0, id(12)});
    r.push_back({id(14), 0, id(12)});
    for (int v : {1, 3}) r.push_back({id(v), -1, id(2)});
    for (int v : {5, 7}) r.push_back({id(v), -1, id(6)});
    for (int v : {9, 11}) r.push_back({id(v), -1, id(10)});
    for (int v : {13, 15}) r.push_back({id(v), -1, id(14)});
    auto tree = covertree::CompressedCoverTree::from_records(id(8), r);
    tree.compute_distinctive_counts();
    return tree;
}

/// R = {1,2,3,4,5,7,8}, ids 0..6 in that order; root 1 at level 2.
inline std::vector<double> unique_descendant_values() { return {1, 2, 3, 4, 5, 7, 8}; }

inline covertree::CompressedCoverTree unique_descendant_tree() {
    using covertree::NodeRecord;
    // ids: 1->0, 2->1, 3->2, 4->3, 5->4, 7->5, 8->6
    std::vector<NodeRecord> r{
        {0, 2, std::nullopt}, {4, 1, 0}, {2, 0, 0}, {5, 0, 4}, {1, -1, 2}, {3, -1, 2}, {6, -1, 5},
    };
    auto tree = covertree::CompressedCoverTree::from_records(0, r);
    tree.compute_distinctive_counts();
    return tree;
}

inline std::vector<covertree::MetricKind> all_metrics() {
    return {covertree::MetricKind::euclidean, covertree::MetricKind::manhattan, covertree::MetricKind::chebyshev};
}

} // namespace testing_support

#endif
