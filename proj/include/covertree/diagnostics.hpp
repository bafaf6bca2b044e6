#ifndef COVERTREE_DIAGNOSTICS_HPP
#define COVERTREE_DIAGNOSTICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "errors.hpp"
#include "metric.hpp"
#include "search.hpp"
#include "tree.hpp"

namespace covertree {

// ---------------------------------------------------------------------------
// Expansion constant

/// c(R) with the ball pair that attains it.
struct ExpansionReport {
    double c = 2;
    /// sup of |B(p,2t)| / |B(p,t)| before the floor at 2.
    double max_ratio = 1;
    PointId witness_point = 0;
    double witness_radius = 0;
    std::size_t inner_count = 1; ///< |B(p,t)| at the witness
    std::size_t outer_count = 1; ///< |B(p,2t)| at the witness
};

namespace detail {

struct RowBest {
    std::size_t outer = 1;
    std::size_t inner = 1;
    double radius = 0;
};

inline bool ratio_greater(std::size_t num_a, std::size_t den_a, std::size_t num_b, std::size_t den_b) {
    return static_cast<unsigned __int128>(num_a) * den_b > static_cast<unsigned __int128>(num_b) * den_a;
}

/**
 * Largest |B(p,2t)| / |B(p,t)| for one center from its sorted distance row.
 * Both counts are right-continuous steps in t, so the supremum sits at a
 * breakpoint t = s_j or t = s_j / 2.
 */
inline RowBest best_ratio(const std::vector<double>& row) {
    RowBest best;
    const std::size_t m = row.size();
    // t = s_j: inner = #s <= s_j, outer = #s <= 2 s_j, both monotone in j.
    std::size_t outer = 0;
    for (std::size_t j = 0; j < m; ++j) {
        if (j + 1 < m && row[j + 1] == row[j]) {
            continue;
        }
        const double t = row[j];
        const std::size_t inner = j + 1;
        while (outer < m && row[outer] <= 2 * t) {
            ++outer;
        }
        if (ratio_greater(outer, inner, best.outer, best.inner)) {
            best = {outer, inner, t};
        }
    }
    // t = s_j / 2: outer = #s <= s_j, inner = #s <= s_j / 2.
    std::size_t inner = 0;
    for (std::size_t j = 0; j < m; ++j) {
        if (j + 1 < m && row[j + 1] == row[j]) {
            continue;
        }
        const double t = row[j] / 2;
        while (inner < m && row[inner] <= t) {
            ++inner;
        }
        const std::size_t outer_here = j + 1;
        if (inner > 0 && ratio_greater(outer_here, inner, best.outer, best.inner)) {
            best = {outer_here, inner, t};
        }
    }
    return best;
}

inline ExpansionReport report_from(const RowBest& best, PointId p) {
    ExpansionReport r;
    r.max_ratio = static_cast<double>(best.outer) / static_cast<double>(best.inner);
    r.c = std::max(2.0, r.max_ratio);
    r.witness_point = p;
    r.witness_radius = best.radius;
    r.inner_count = best.inner;
    r.outer_count = best.outer;
    return r;
}

} // namespace detail

/**
 * Sorted distance rows of a point set, kept so c(R) and c(R ∪ {q}) for many
 * queries q can be computed without re-evaluating the O(|R|^2) distances.
 */
class BallCountTable {
public:
    template <class Space>
    explicit BallCountTable(MetricSession<Space>& session) : rows_(session.size()) {
        const std::size_t n = session.size();
        for (auto& row : rows_) {
            row.assign(n, 0.0);
        }
        for (PointId a = 0; a < n; ++a) {
            for (PointId b = a + 1; b < n; ++b) {
                const double d = session.distance(a, b);
                rows_[a][b] = d;
                rows_[b][a] = d;
            }
        }
        for (auto& row : rows_) {
            std::sort(row.begin(), row.end());
        }
        base_ = compute(std::nullopt);
    }

    std::size_t size() const { return rows_.size(); }
    const std::vector<double>& row(PointId p) const { return rows_.at(p); }
    const ExpansionReport& expansion() const { return base_; }

    /**
     * c(R ∪ {q}) from the distances d(q, r) for every r. A query equal to a
     * data point (distance 0) leaves the set unchanged. The witness id
     * size() stands for q itself.
     */
    ExpansionReport with_query(const std::vector<double>& to_query) const {
        if (to_query.size() != rows_.size()) {
            throw ParameterError("with_query needs one distance per point");
        }
        if (std::any_of(to_query.begin(), to_query.end(), [](double d) { return d == 0; })) {
            return base_;
        }
        return compute(to_query);
    }

    template <class Space>
    ExpansionReport with_query(const MetricSession<Space>& session, typename Space::query_type q) const {
        std::vector<double> d(session.size());
        for (PointId r = 0; r < d.size(); ++r) {
            d[r] = session.uncounted_to(q, r);
        }
        return with_query(d);
    }

private:
    ExpansionReport compute(const std::optional<std::vector<double>>& extra) const {
        detail::RowBest best;
        PointId arg = 0;
        std::vector<double> scratch;
        auto consider = [&](const std::vector<double>& row, PointId p) {
            const auto b = detail::best_ratio(row);
            if (detail::ratio_greater(b.outer, b.inner, best.outer, best.inner)) {
                best = b;
                arg = p;
            }
        };
        for (PointId p = 0; p < rows_.size(); ++p) {
            if (!extra) {
                consider(rows_[p], p);
                continue;
            }
            const double dq = (*extra)[p];
            scratch.resize(rows_[p].size() + 1);
            auto pos = std::upper_bound(rows_[p].begin(), rows_[p].end(), dq);
            auto out = std::copy(rows_[p].begin(), pos, scratch.begin());
            *out++ = dq;
            std::copy(pos, rows_[p].end(), out);
            consider(scratch, p);
        }
        if (extra) {
            scratch.assign(extra->begin(), extra->end());
            scratch.push_back(0.0);
            std::sort(scratch.begin(), scratch.end());
            consider(scratch, rows_.size());
        }
        return detail::report_from(best, arg);
    }

    std::vector<std::vector<double>> rows_;
    ExpansionReport base_;
};

/**
 * c(R) = max(2, sup over p in R and t >= 0 of |B(p,2t)| / |B(p,t)|), exact
 * over all breakpoint radii. O(|R|^2) distances, O(|R|^2 log|R|) time.
 */
template <class Space>
ExpansionReport expansion_constant(MetricSession<Space>& session) {
    if (session.size() == 0) {
        throw DegenerateInputError("expansion constant of an empty set");
    }
    return BallCountTable(session).expansion();
}

/// Exhaustive |B(p, t)| used to re-check witnesses.
template <class Space>
std::size_t ball_count(const MetricSession<Space>& session, PointId p, double t) {
    std::size_t count = 0;
    for (PointId r = 0; r < session.size(); ++r) {
        if (session.uncounted(p, r) <= t) {
            ++count;
        }
    }
    return count;
}

// ---------------------------------------------------------------------------
// Grid-extension estimate of c_m in normed R^n

struct CmOptions {
    /// Random core lattice points added to the fixed centers, per δ.
    std::size_t random_centers = 64;
    std::uint64_t seed = 0;
};

struct CmEstimate {
    double delta = 0;
    double value = 0;
    std::size_t centers = 0;
    std::vector<double> center; ///< coordinates of the witness center
    double radius = 0;          ///< witness t
};

/// ρ = max_i ‖e_i‖; the unit vectors have norm 1 under all three built-in norms.
inline double unit_vector_rho(MetricKind kind) {
    switch (kind) {
    case MetricKind::euclidean:
    case MetricKind::manhattan:
    case MetricKind::chebyshev: return 1.0;
    }
    throw UnsupportedMetricError("unknown metric");
}

namespace detail {

/**
 * Number of lattice points δ·m (m in Z^n) in the closed ball of radius t
 * around x, counted row by row.
 */
inline std::uint64_t lattice_ball_count(MetricKind kind, std::span<const double> x, double t, double delta,
                                        std::size_t axis = 0) {
    if (t < 0) {
        return 0;
    }
    const double c = x[axis];
    const auto lo = static_cast<std::int64_t>(std::ceil((c - t) / delta));
    const auto hi = static_cast<std::int64_t>(std::floor((c + t) / delta));
    if (hi < lo) {
        return 0;
    }
    if (axis + 1 == x.size()) {
        return static_cast<std::uint64_t>(hi - lo + 1);
    }
    if (kind == MetricKind::chebyshev) {
        return static_cast<std::uint64_t>(hi - lo + 1) * lattice_ball_count(kind, x, t, delta, axis + 1);
    }
    std::uint64_t total = 0;
    for (std::int64_t m = lo; m <= hi; ++m) {
        const double off = std::abs(c - delta * static_cast<double>(m));
        const double rest =
            kind == MetricKind::euclidean ? std::sqrt(std::max(0.0, t * t - off * off)) : t - off;
        total += lattice_ball_count(kind, x, rest, delta, axis + 1);
    }
    return total;
}

struct GridExtension {
    MetricKind kind;
    std::size_t dim;
    double delta;
    std::vector<double> box_lo;
    std::vector<double> box_hi;
    const PointSet* points;
    std::vector<std::vector<std::int64_t>> images; ///< f(r) as lattice indices
    std::set<std::vector<std::int64_t>> image_set;

    std::vector<double> lattice_point(const std::vector<std::int64_t>& m) const {
        std::vector<double> x(dim);
        for (std::size_t a = 0; a < dim; ++a) {
            x[a] = delta * static_cast<double>(m[a]);
        }
        return x;
    }

    /// |B(x, t) ∩ U(δ)| = lattice count - substituted lattice points + data points.
    std::uint64_t count(std::span<const double> x, double t) const {
        std::uint64_t total = lattice_ball_count(kind, x, t, delta);
        for (std::size_t r = 0; r < points->size(); ++r) {
            const auto img = lattice_point(images[r]);
            if (coordinate_distance(kind, x, img) <= t) {
                --total;
            }
            if (coordinate_distance(kind, x, (*points)[r]) <= t) {
                ++total;
            }
        }
        return total;
    }

    bool in_core(std::span<const double> x, double margin) const {
        for (std::size_t a = 0; a < dim; ++a) {
            if (x[a] - box_lo[a] < margin || box_hi[a] - x[a] < margin) {
                return false;
            }
        }
        return true;
    }
};

} // namespace detail

/**
 * Upper-bound proxy for the minimized expansion constant of coordinate data.
 *
 * For each δ the point set is embedded in U(δ): the lattice δZ^n with every
 * data point r replacing its nearest lattice point f(r). The value reported
 * is the largest |B(p,2t) ∩ U| / |B(p,t) ∩ U| over centers p of U inside the
 * core of a box padded by 4·max(diam, ξ), for t = ξ·2^j up to max(diam, ξ).
 * Centers are the data points, the lattice neighbours of every f(r) and
 * a seeded sample of core lattice points.
 */
inline std::vector<CmEstimate> cm_upper_estimate(const PointSet& points, MetricKind kind,
                                                 std::span<const double> deltas, double xi,
                                                 const CmOptions& options = {}) {
    if (points.empty()) {
        throw DegenerateInputError("c_m estimate of an empty set");
    }
    if (!(xi > 0) || !std::isfinite(xi)) {
        throw ParameterError("xi must be positive");
    }
    if (deltas.empty()) {
        throw ParameterError("delta schedule is empty");
    }
    const std::size_t n = points.dim();
    const double rho = unit_vector_rho(kind);
    const double nrho = static_cast<double>(n) * rho;

    CoordinateSpace space(points, kind);
    MetricSession session(space);
    double diam = 0;
    double d_min = std::numeric_limits<double>::infinity();
    if (points.size() >= 2) {
        const auto dd = diameter_and_dmin(session);
        diam = dd.diameter;
        d_min = dd.d_min;
        if (!(d_min > 0)) {
            throw DuplicatePointError("c_m estimate needs distinct points");
        }
    }
    const double limit = std::min(xi / nrho, d_min / (2 * nrho));
    for (std::size_t s = 0; s < deltas.size(); ++s) {
        if (!(deltas[s] > 0) || !(deltas[s] < limit)) {
            throw ParameterError("delta " + std::to_string(deltas[s]) + " must lie in (0, " + std::to_string(limit) +
                                 ")");
        }
        if (s > 0 && !(deltas[s] < deltas[s - 1])) {
            throw ParameterError("delta schedule must be strictly decreasing");
        }
    }

    const double scale = std::max(diam, xi);
    const double pad = 4 * scale;
    std::vector<double> lo(n, std::numeric_limits<double>::infinity());
    std::vector<double> hi(n, -std::numeric_limits<double>::infinity());
    for (std::size_t r = 0; r < points.size(); ++r) {
        for (std::size_t a = 0; a < n; ++a) {
            lo[a] = std::min(lo[a], points[r][a]);
            hi[a] = std::max(hi[a], points[r][a]);
        }
    }
    for (std::size_t a = 0; a < n; ++a) {
        lo[a] -= pad;
        hi[a] += pad;
    }

    std::vector<double> radii;
    for (double t = xi; t <= scale; t *= 2) {
        radii.push_back(t);
    }

    std::mt19937_64 rng(options.seed);
    std::vector<CmEstimate> out;
    for (double delta : deltas) {
        detail::GridExtension grid{kind, n, delta, lo, hi, &points, {}, {}};
        for (std::size_t r = 0; r < points.size(); ++r) {
            std::vector<std::int64_t> m(n);
            for (std::size_t a = 0; a < n; ++a) {
                m[a] = static_cast<std::int64_t>(std::llround(points[r][a] / delta));
            }
            grid.images.push_back(m);
            grid.image_set.insert(m);
        }
        if (grid.image_set.size() != points.size()) {
            throw InvariantError("nearest-lattice map is not injective at delta " + std::to_string(delta));
        }

        // Centers: data points, lattice neighbours of f(R), random core lattice points.
        std::vector<std::vector<double>> centers;
        for (std::size_t r = 0; r < points.size(); ++r) {
            centers.emplace_back(points[r].begin(), points[r].end());
        }
        std::set<std::vector<std::int64_t>> chosen;
        for (const auto& img : grid.images) {
            const std::size_t combos = static_cast<std::size_t>(std::pow(3.0, static_cast<double>(n)));
            for (std::size_t code = 0; code < combos; ++code) {
                std::vector<std::int64_t> m = img;
                std::size_t rest = code;
                for (std::size_t a = 0; a < n; ++a) {
                    m[a] += static_cast<std::int64_t>(rest % 3) - 1;
                    rest /= 3;
                }
                if (!grid.image_set.count(m) && chosen.insert(m).second) {
                    centers.push_back(grid.lattice_point(m));
                }
            }
        }
        for (std::size_t s = 0; s < options.random_centers; ++s) {
            std::vector<std::int64_t> m(n);
            for (std::size_t a = 0; a < n; ++a) {
                const auto first = static_cast<std::int64_t>(std::ceil(lo[a] / delta));
                const auto last = static_cast<std::int64_t>(std::floor(hi[a] / delta));
                m[a] = std::uniform_int_distribution<std::int64_t>(first, last)(rng);
            }
            if (!grid.image_set.count(m) && chosen.insert(m).second) {
                centers.push_back(grid.lattice_point(m));
            }
        }

        CmEstimate est;
        est.delta = delta;
        est.value = 1;
        for (const auto& x : centers) {
            for (double t : radii) {
                if (!grid.in_core(x, 2 * t + nrho * delta)) {
                    continue;
                }
                ++est.centers;
                const auto inner = grid.count(x, t);
                const auto outer = grid.count(x, 2 * t);
                const double ratio = static_cast<double>(outer) / static_cast<double>(inner);
                if (ratio > est.value) {
                    est.value = ratio;
                    est.center = x;
                    est.radius = t;
                }
            }
        }
        out.push_back(std::move(est));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Aggregate report

struct DiagnosticsReport {
    std::size_t points = 0;
    std::optional<ExpansionReport> expansion;
    std::optional<double> aspect_ratio;
    std::optional<double> diameter;
    std::optional<double> d_min;
    std::size_t height = 0;
    std::optional<double> height_bound; ///< 1 + log2 Δ
    int l_max = 0;
    int l_min = 0;
    /// number of (p, level) child groups of each size
    std::map<std::size_t, std::size_t> width_histogram;
    std::size_t max_width = 0;

    struct Queries {
        std::size_t count = 0;
        double mean_iterations = 0;
        std::size_t max_iterations = 0;
        double mean_distance_evals = 0;
        std::uint64_t max_distance_evals = 0;
    };
    std::optional<Queries> queries;
};

template <class Space>
DiagnosticsReport stats_report(MetricSession<Space>& session, const CompressedCoverTree& tree,
                               std::span<const QueryTrace> traces, bool with_expansion = true) {
    DiagnosticsReport r;
    r.points = session.size();
    if (with_expansion && session.size() >= 1) {
        r.expansion = expansion_constant(session);
    }
    if (session.size() >= 2) {
        const auto dd = diameter_and_dmin(session);
        r.diameter = dd.diameter;
        r.d_min = dd.d_min;
        if (dd.d_min > 0) {
            r.aspect_ratio = dd.diameter / dd.d_min;
            r.height_bound = 1 + std::log2(*r.aspect_ratio);
        }
    }
    r.height = height_set(tree).size();
    r.l_max = tree.l_max();
    r.l_min = tree.l_min();
    for (PointId p : tree.ids()) {
        for (const auto& [lvl, group] : tree.children(p)) {
            ++r.width_histogram[group.size()];
            r.max_width = std::max(r.max_width, group.size());
        }
    }
    if (!traces.empty()) {
        DiagnosticsReport::Queries qs;
        qs.count = traces.size();
        for (const auto& t : traces) {
            qs.mean_iterations += static_cast<double>(t.iterations());
            qs.max_iterations = std::max(qs.max_iterations, t.iterations());
            qs.mean_distance_evals += static_cast<double>(t.distance_evals);
            qs.max_distance_evals = std::max(qs.max_distance_evals, t.distance_evals);
        }
        qs.mean_iterations /= static_cast<double>(traces.size());
        qs.mean_distance_evals /= static_cast<double>(traces.size());
        r.queries = qs;
    }
    return r;
}

} // namespace covertree

#endif
