#ifndef COVERTREE_METRIC_HPP
#define COVERTREE_METRIC_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "errors.hpp"

/**
 * @file metric.hpp
 *
 * Point storage, the built-in coordinate metrics, the counting session every
 * algorithm goes through, and the brute-force k-NN oracle.
 */

namespace covertree {

/// Dense index of a point within its dataset (row order of the input).
using PointId = std::size_t;

enum class MetricKind { euclidean, manhattan, chebyshev };

inline std::string_view to_string(MetricKind kind) {
    switch (kind) {
    case MetricKind::euclidean: return "euclidean";
    case MetricKind::manhattan: return "manhattan";
    case MetricKind::chebyshev: return "chebyshev";
    }
    return "unknown";
}

inline MetricKind parse_metric(std::string_view name) {
    if (name == "euclidean" || name == "l2") return MetricKind::euclidean;
    if (name == "manhattan" || name == "l1") return MetricKind::manhattan;
    if (name == "chebyshev" || name == "linf") return MetricKind::chebyshev;
    throw ParameterError("unknown metric '" + std::string(name) + "'");
}

inline double coordinate_distance(MetricKind kind, std::span<const double> a, std::span<const double> b) {
    double out = 0;
    const std::size_t n = a.size();
    switch (kind) {
    case MetricKind::euclidean:
        for (std::size_t i = 0; i < n; ++i) {
            const double delta = a[i] - b[i];
            out += delta * delta;
        }
        return std::sqrt(out);
    case MetricKind::manhattan:
        for (std::size_t i = 0; i < n; ++i) {
            out += std::abs(a[i] - b[i]);
        }
        return out;
    case MetricKind::chebyshev:
        for (std::size_t i = 0; i < n; ++i) {
            out = std::max(out, std::abs(a[i] - b[i]));
        }
        return out;
    }
    return out;
}

/**
 * Row-major coordinate storage. All rows share one dimension.
 */
class PointSet {
public:
    PointSet() = default;
    explicit PointSet(std::size_t dim) : dim_(dim) {}

    PointSet(std::size_t dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords)) {
        if (dim_ == 0 || coords_.size() % dim_ != 0) {
            throw ParameterError("coordinate buffer is not a multiple of the dimension");
        }
    }

    static PointSet from_rows(const std::vector<std::vector<double>>& rows) {
        if (rows.empty()) {
            return PointSet();
        }
        PointSet out(rows.front().size());
        for (const auto& r : rows) {
            out.push_back(r);
        }
        return out;
    }

    void push_back(std::span<const double> row) {
        if (dim_ == 0 && coords_.empty()) {
            dim_ = row.size();
        }
        if (row.size() != dim_ || dim_ == 0) {
            throw ParameterError("point has dimension " + std::to_string(row.size()) + ", expected " + std::to_string(dim_));
        }
        coords_.insert(coords_.end(), row.begin(), row.end());
    }

    std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / dim_; }
    std::size_t dim() const { return dim_; }
    bool empty() const { return size() == 0; }

    std::span<const double> operator[](PointId i) const {
        return std::span<const double>(coords_.data() + i * dim_, dim_);
    }

    const std::vector<double>& coordinates() const { return coords_; }

private:
    std::size_t dim_ = 0;
    std::vector<double> coords_;
};

/**
 * A point set under one of the built-in norms. Queries are coordinate spans
 * of the same dimension.
 */
class CoordinateSpace {
public:
    using query_type = std::span<const double>;

    CoordinateSpace(const PointSet& points, MetricKind kind) : points_(&points), kind_(kind) {}

    std::size_t size() const { return points_->size(); }
    std::size_t dim() const { return points_->dim(); }
    MetricKind kind() const { return kind_; }
    const PointSet& points() const { return *points_; }

    query_type point(PointId i) const { return (*points_)[i]; }

    double distance(PointId a, PointId b) const {
        return coordinate_distance(kind_, (*points_)[a], (*points_)[b]);
    }

    double distance_to(query_type q, PointId b) const {
        if (q.size() != points_->dim()) {
            throw ParameterError("query has dimension " + std::to_string(q.size()) + ", dataset has " +
                                 std::to_string(points_->dim()));
        }
        return coordinate_distance(kind_, q, (*points_)[b]);
    }

private:
    const PointSet* points_;
    MetricKind kind_;
};

/**
 * Opaque points with a user-supplied distance. The callback must be a metric;
 * nothing here checks that beyond the property tests.
 */
template <class Point, class Distance>
class CallbackSpace {
public:
    using query_type = const Point&;

    CallbackSpace(const std::vector<Point>& points, Distance dist) : points_(&points), dist_(std::move(dist)) {}

    std::size_t size() const { return points_->size(); }
    query_type point(PointId i) const { return (*points_)[i]; }
    double distance(PointId a, PointId b) const { return dist_((*points_)[a], (*points_)[b]); }
    double distance_to(query_type q, PointId b) const { return dist_(q, (*points_)[b]); }

private:
    const std::vector<Point>* points_;
    Distance dist_;
};

/**
 * Counting wrapper around a space. Every call to distance() or distance_to()
 * increments the evaluation counter by exactly one. Not thread-safe: give
 * each concurrent query its own session over the shared, immutable space.
 */
template <class Space>
class MetricSession {
public:
    using space_type = Space;
    using query_type = typename Space::query_type;

    explicit MetricSession(const Space& space) : space_(&space) {}

    const Space& space() const { return *space_; }
    std::size_t size() const { return space_->size(); }

    double distance(PointId a, PointId b) {
        check(a);
        check(b);
        ++evaluations_;
        return space_->distance(a, b);
    }

    double distance_to(query_type q, PointId b) {
        check(b);
        ++evaluations_;
        return space_->distance_to(q, b);
    }

    // Used by lemma checks and validators that must not disturb the counter.
    double uncounted(PointId a, PointId b) const { return space_->distance(a, b); }
    double uncounted_to(query_type q, PointId b) const { return space_->distance_to(q, b); }

    std::uint64_t evaluations() const { return evaluations_; }
    void reset() { evaluations_ = 0; }

private:
    void check(PointId i) const {
        if (i >= space_->size()) {
            throw IndexError("point id " + std::to_string(i) + " out of range [0, " + std::to_string(space_->size()) + ")");
        }
    }

    const Space* space_;
    std::uint64_t evaluations_ = 0;
};

/// k neighbors sorted by ascending distance, ties by ascending id.
struct NeighborAnswer {
    std::vector<PointId> ids;
    std::vector<double> distances;

    std::size_t size() const { return ids.size(); }
};

inline void check_k(std::size_t k, std::size_t n) {
    if (k == 0) {
        throw ParameterError("k must be positive");
    }
    if (k > n) {
        throw ParameterError("k = " + std::to_string(k) + " exceeds the number of points " + std::to_string(n));
    }
}

/**
 * Exhaustive k-NN: evaluates all |R| distances, sorts by (distance, id) and
 * keeps the first k. This is the reference every search is checked against.
 */
template <class Space>
NeighborAnswer knn_bruteforce(MetricSession<Space>& session, typename Space::query_type q, std::size_t k) {
    const std::size_t n = session.size();
    check_k(k, n);
    std::vector<std::pair<double, PointId>> all(n);
    for (PointId i = 0; i < n; ++i) {
        all[i] = {session.distance_to(q, i), i};
    }
    std::sort(all.begin(), all.end());
    NeighborAnswer out;
    out.ids.reserve(k);
    out.distances.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        out.distances.push_back(all[i].first);
        out.ids.push_back(all[i].second);
    }
    return out;
}

struct DiameterAndMin {
    double diameter = 0;
    double d_min = 0;
};

template <class Space>
DiameterAndMin diameter_and_dmin(MetricSession<Space>& session) {
    const std::size_t n = session.size();
    if (n < 2) {
        throw DegenerateInputError("diameter and minimum distance need at least two points");
    }
    DiameterAndMin out{0, std::numeric_limits<double>::infinity()};
    for (PointId a = 0; a < n; ++a) {
        for (PointId b = a + 1; b < n; ++b) {
            const double d = session.distance(a, b);
            out.diameter = std::max(out.diameter, d);
            out.d_min = std::min(out.d_min, d);
        }
    }
    return out;
}

template <class Space>
double aspect_ratio(MetricSession<Space>& session) {
    const auto dd = diameter_and_dmin(session);
    if (dd.d_min <= 0) {
        throw DuplicatePointError("minimum pairwise distance is zero; deduplicate the dataset first");
    }
    return dd.diameter / dd.d_min;
}

/// Result of the duplicate-removal pre-pass.
struct Deduplicated {
    PointSet points;
    /// original row -> id in `points`
    std::vector<PointId> mapping;
    std::size_t removed = 0;
};

/**
 * Removes rows with identical coordinates (distance zero under every
 * built-in norm). The first occurrence keeps its relative order.
 */
inline Deduplicated deduplicate(const PointSet& points) {
    const std::size_t n = points.size();
    std::vector<PointId> order(n);
    std::iota(order.begin(), order.end(), PointId{0});
    auto lex_less = [&](PointId a, PointId b) {
        auto pa = points[a];
        auto pb = points[b];
        if (std::lexicographical_compare(pa.begin(), pa.end(), pb.begin(), pb.end())) return true;
        if (std::lexicographical_compare(pb.begin(), pb.end(), pa.begin(), pa.end())) return false;
        return a < b;
    };
    std::sort(order.begin(), order.end(), lex_less);

    std::vector<PointId> representative(n);
    for (std::size_t i = 0; i < n; ++i) {
        const PointId cur = order[i];
        if (i > 0) {
            auto prev = points[order[i - 1]];
            auto here = points[cur];
            if (std::equal(prev.begin(), prev.end(), here.begin(), here.end())) {
                representative[cur] = representative[order[i - 1]];
                continue;
            }
        }
        representative[cur] = cur;
    }

    Deduplicated out;
    out.points = PointSet(points.dim());
    out.mapping.assign(n, 0);
    std::vector<PointId> new_id(n, 0);
    for (PointId i = 0; i < n; ++i) {
        if (representative[i] == i) {
            new_id[i] = out.points.size();
            out.points.push_back(points[i]);
        } else {
            ++out.removed;
        }
    }
    for (PointId i = 0; i < n; ++i) {
        out.mapping[i] = new_id[representative[i]];
    }
    return out;
}

} // namespace covertree

#endif
