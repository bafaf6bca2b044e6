// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "support.hpp"

using namespace covertree;
using namespace testing_support;

namespace {

using clock_type = std::chrono::steady_clock;

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail, clock_type::time_point start) {
    const double secs = std::chrono::duration<double>(clock_type::now() - start).count();
    std::printf("%s %2d %s: %s [%.1fs]\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str(), secs);
    std::fflush(stdout);
    failures += !ok;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

struct GridCase {
    PointSet points;
    MetricKind kind;
    std::uint64_t seed;
};

/// Drops points within `gap` of an earlier kept point; clustered draws can land closer than the build accepts.
PointSet thin(const PointSet& pts, MetricKind kind, double gap) {
    PointSet out(pts.dim());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        bool keep = true;
        for (std::size_t j = 0; j < out.size() && keep; ++j) {
            keep = coordinate_distance(kind, pts[i], out[j]) >= gap;
        }
        if (keep) out.push_back(pts[i]);
    }
    return out;
}

/// sizes 2..512, dims 1..8, all three norms, seeds cycling over 10 values.
std::vector<GridCase> randomized_grid() {
    std::vector<GridCase> out;
    std::size_t counter = 0;
    for (std::size_t n : {2u, 3u, 8u, 31u, 100u, 256u, 512u}) {
        for (std::size_t dim : {1u, 2u, 3u, 5u, 8u}) {
            for (auto kind : all_metrics()) {
                const std::uint64_t seed = counter++ % 10;
                const std::uint64_t data_seed = 1000 * n + 10 * dim + seed;
                PointSet pts = counter % 3 == 0 ? random_grid_points(n, dim, data_seed, 50)
                               : counter % 3 == 1 ? random_real_points(n, dim, data_seed)
                                                  : deduplicate(clustered_points(n, dim, data_seed)).points;
                out.push_back({thin(pts, kind, 1e-4), kind, seed});
            }
        }
    }
    return out;
}

std::vector<std::size_t> k_values(std::size_t n) {
    std::set<std::size_t> ks;
    for (std::size_t k : {std::size_t{1}, std::size_t{3}, std::size_t{5}, n}) {
        if (k <= n) ks.insert(k);
    }
    return {ks.begin(), ks.end()};
}

std::vector<double> make_query(const PointSet& pts, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-0.25, 1.25);
    std::vector<double> q(pts.dim());
    for (auto& x : q) x = u(rng);
    if (rng() % 5 == 0) {
        const auto p = pts[rng() % pts.size()];
        q.assign(p.begin(), p.end());
    }
    return q;
}

struct Built {
    CompressedCoverTree tree;
    BuildTrace trace;
    double c = 2;
};

/// Independent enumeration: q is in S_i(p) when the path p -> q leaves p through a child of level < i.
std::set<PointId> brute_distinctive(const CompressedCoverTree& tree, PointId p, int i) {
    std::set<PointId> out;
    for (PointId q : tree.ids()) {
        if (q == p) {
            out.insert(q);
            continue;
        }
        PointId x = q;
        std::optional<PointId> below;
        while (x != p) {
            const auto up = tree.parent(x);
            if (!up) break;
            below = x;
            x = *up;
        }
        if (x == p && below && tree.level(*below) < i) out.insert(q);
    }
    return out;
}

std::set<int> brute_essential(const CompressedCoverTree& tree, PointId p) {
    std::set<int> e{tree.level(p)};
    for (PointId q : tree.ids()) {
        if (tree.parent(q) == p) e.insert(tree.level(q));
    }
    return e;
}

} // namespace

int main() {
    const auto grid = randomized_grid();
    std::mt19937_64 rng(20240611);

    // Build every tree once; the construction checks run in debug-assert mode.
    auto t0 = clock_type::now();
    LemmaRegistry::instance().reset();
    set_debug_asserts(1);
    std::vector<Built> built;
    for (const auto& g : grid) {
        CoordinateSpace space(g.points, g.kind);
        MetricSession s(space);
        auto r = build(s, {RootPolicy::seeded, 0, g.seed});
        MetricSession cs(space);
        built.push_back({std::move(r.tree), std::move(r.trace), expansion_constant(cs).c});
    }
    set_debug_asserts(-1);
    const auto build_checks = LemmaRegistry::instance().checks();
    const auto build_failed = LemmaRegistry::instance().failed();
    const double build_secs = std::chrono::duration<double>(clock_type::now() - t0).count();

    // 1, 6 (query part) and 7 share the query sweep.
    t0 = clock_type::now();
    std::size_t instances = 0;
    std::size_t mismatches = 0;
    std::size_t knn_bound_violations = 0;
    std::size_t knn_max_iter = 0;
    std::size_t query_checks = 0;
    std::size_t query_failed = 0;
    LemmaRegistry::instance().reset();
    for (std::size_t g = 0; g < grid.size(); ++g) {
        CoordinateSpace space(grid[g].points, grid[g].kind);
        MetricSession ts(space);
        const BallCountTable table(ts);
        std::vector<QueryTrace> traces;
        std::vector<double> cq;
        for (std::size_t k : k_values(grid[g].points.size())) {
            const auto q = make_query(grid[g].points, rng);
            SearchOptions opts;
            opts.check_lemmas = true;
            opts.c = built[g].c;
            MetricSession qs(space);
            const auto r = knn_search(built[g].tree, qs, q, k, opts);
            MetricSession bs(space);
            const auto o = knn_bruteforce(bs, q, k);
            ++instances;
            mismatches += r.answer.distances != o.distances;
            traces.push_back(r.trace);
            cq.push_back(table.with_query(qs, q).c);
        }
        const auto check = knn_iteration_bound_check(traces, cq, grid[g].points.size());
        knn_bound_violations += check.violators.size();
        knn_max_iter = std::max(knn_max_iter, check.observed);
    }
    query_checks = LemmaRegistry::instance().checks();
    query_failed = LemmaRegistry::instance().failed();
    const auto query_failures = LemmaRegistry::instance().failures();
    report(1, instances >= 200 && mismatches == 0, "exact search equals brute force",
           fmt("%.0f instances, %.0f mismatches", instances, mismatches), t0);

    // 2
    t0 = clock_type::now();
    {
        const auto pts = line_range(1, 15);
        CoordinateSpace space(pts, MetricKind::euclidean);
        MetricSession s(space);
        const auto tree = build(s, {RootPolicy::index, 7, 0}).tree;
        const std::vector<double> q{0};
        const auto r = knn_search(tree, s, q, 5);
        std::set<double> values;
        for (PointId id : r.answer.ids) values.insert(pts[id][0]);
        report(2, values == std::set<double>{1, 2, 3, 4, 5}, "worked example on {1..15}, root 8, q=0, k=5",
               fmt("answer values {%g..%g}, %g points", *values.begin(), *values.rbegin(), values.size()), t0);
    }

    // 3
    t0 = clock_type::now();
    {
        std::size_t invalid = 0;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            CoordinateSpace space(grid[g].points, grid[g].kind);
            MetricSession s(space);
            invalid += !validate(built[g].tree, s).ok() || built[g].tree.size() != grid[g].points.size();
        }
        report(3, invalid == 0, "every built tree passes the validator with |R| nodes",
               fmt("%.0f trees, %.0f invalid (build time %.1fs)", grid.size(), invalid, build_secs), t0);
    }

    // 4
    t0 = clock_type::now();
    {
        std::size_t over = 0;
        std::size_t over_provable = 0;
        std::size_t trees = 0;
        double worst = -1e9;
        auto consider = [&](const CompressedCoverTree& tree, MetricSession<CoordinateSpace>& s) {
            if (s.size() < 2) return;
            ++trees;
            const auto dd = diameter_and_dmin(s);
            const double bound = 1 + std::log2(dd.diameter / dd.d_min);
            const auto h = static_cast<double>(height_set(tree).size());
            over += h > bound;
            worst = std::max(worst, h - bound);
            over_provable += h > ceil_log2(dd.diameter) - ceil_log2(dd.d_min) + 2;
        };
        for (std::size_t g = 0; g < grid.size(); ++g) {
            CoordinateSpace space(grid[g].points, grid[g].kind);
            MetricSession s(space);
            consider(built[g].tree, s);
        }
        const auto pts = line_range(1, 15);
        CoordinateSpace space(pts, MetricKind::euclidean);
        MetricSession s(space);
        consider(build(s, {RootPolicy::index, 7, 0}).tree, s);
        report(4, over == 0, "|H| <= 1 + log2(aspect ratio)",
               fmt("%.0f of %.0f trees exceed it, worst excess %.3f", over, trees, worst), t0);
        std::printf("INFO    height: |H| <= ceil(log2 diam) - ceil(log2 d_min) + 2 exceeded by %zu trees\n",
                    over_provable);
    }

    // 5
    t0 = clock_type::now();
    {
        std::size_t trees = 0;
        std::size_t bad_counts = 0;
        std::size_t bad_collect = 0;
        std::size_t bad_sum = 0;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const auto& tree = built[g].tree;
            if (tree.size() > 64) continue;
            ++trees;
            std::size_t sum = 0;
            for (PointId p : tree.ids()) {
                const auto e = brute_essential(tree, p);
                sum += e.size();
                for (int i : e) {
                    const auto expect = brute_distinctive(tree, p, i);
                    bad_counts += tree.distinctive_count(p, i) != expect.size();
                    const auto got = collect_subtree(tree, p, i);
                    bad_collect += std::set<PointId>(got.begin(), got.end()) != expect || got.size() != expect.size();
                }
            }
            bad_sum += sum > 2 * tree.size();
        }
        report(5, bad_counts == 0 && bad_collect == 0 && bad_sum == 0,
               "distinctive-descendant counts and collections match enumeration",
               fmt("%.0f trees, %.0f count / %.0f collection mismatches", trees, bad_counts, bad_collect) +
                   fmt(", %.0f essential-level sums over 2|R|", bad_sum),
               t0);
    }

    // 6
    t0 = clock_type::now();
    {
        std::size_t build_violations = 0;
        std::size_t build_max = 0;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const auto check = construction_iteration_bound_check(built[g].trace, grid[g].points.size(), built[g].c);
            build_violations += check.violators.size();
            build_max = std::max(build_max, check.observed);
        }
        report(6, build_violations == 0 && knn_bound_violations == 0, "iteration bounds 20c^2 log n and 12c^2 log n",
               fmt("query violations %.0f (max |L| %.0f), ", knn_bound_violations, knn_max_iter) +
                   fmt("construction violations %.0f (max %.0f)", build_violations, build_max),
               t0);
    }

    // 7
    t0 = clock_type::now();
    {
        const bool ok = query_failed == 0 && build_failed == 0 && query_checks > 0 && build_checks > 0;
        report(7, ok, "lemma assertions in debug mode",
               fmt("%.0f/%.0f search checks failed, ", query_failed, query_checks) +
                   fmt("%.0f/%.0f construction checks failed", build_failed, build_checks),
               t0);
        for (std::size_t f = 0; f < query_failures.size() && f < 5; ++f) {
            std::printf("        %s: %s\n", query_failures[f].lemma.c_str(), query_failures[f].detail.c_str());
        }
    }

    // 8
    t0 = clock_type::now();
    {
        std::size_t checked = 0;
        std::size_t failed = 0;
        for (double eps : {0.05, 0.1, 0.5, 1.0, 2.0}) {
            for (std::size_t g = 0; g < grid.size(); ++g) {
                CoordinateSpace space(grid[g].points, grid[g].kind);
                for (std::size_t k : k_values(grid[g].points.size())) {
                    const auto q = make_query(grid[g].points, rng);
                    MetricSession qs(space);
                    const auto a = approx_knn(built[g].tree, qs, q, k, eps);
                    MetricSession bs(space);
                    ++checked;
                    failed += !verify_approx(a.answer, knn_bruteforce(bs, q, k));
                }
            }
        }
        report(8, checked > 0 && failed == 0, "approximate answers pass the (1+eps) certificate",
               fmt("%.0f queries, %.0f failures", checked, failed), t0);
    }

    // 9
    t0 = clock_type::now();
    {
        auto c_of = [](const PointSet& pts) {
            CoordinateSpace space(pts, MetricKind::euclidean);
            MetricSession s(space);
            return expansion_constant(s).c;
        };
        const double a = c_of(line({1, 2, 3, 4, 9}));
        const double b = c_of(line_range(1, 10));
        report(9, a == 5.0 && b == 2.0, "c({1,2,3,4,9}) = 5 and c({1..10}) = 2", fmt("got %g and %g", a, b), t0);
    }

    // 10
    t0 = clock_type::now();
    {
        bool ok = true;
        std::string detail;
        for (std::size_t n : {1u, 2u}) {
            double worst = 0;
            for (std::uint64_t seed = 0; seed < 3; ++seed) {
                const auto pts = random_real_points(n == 1 ? 20 : 8, n, 500 + seed);
                CoordinateSpace space(pts, MetricKind::euclidean);
                MetricSession s(space);
                const double d_min = diameter_and_dmin(s).d_min;
                const double xi = 0.1;
                const double nd = static_cast<double>(n);
                // Halve until δ <= ξ/(16 n ρ), which covers every sampled t >= ξ.
                std::vector<double> deltas{0.9 * std::min(xi / nd, d_min / (2 * nd))};
                while (deltas.back() > xi / (16 * nd)) deltas.push_back(deltas.back() / 2);
                CmOptions opts;
                opts.seed = seed;
                const auto est = cm_upper_estimate(pts, MetricKind::euclidean, deltas, xi, opts);
                worst = std::max(worst, est.back().value);
            }
            const double limit = std::pow(2.0, static_cast<double>(n)) * 1.25;
            ok = ok && worst <= limit;
            detail += fmt("n=%.0f max %.4f (limit %.2f) ", static_cast<double>(n), worst, limit);
        }
        report(10, ok, "grid-extension c_m estimate at the smallest delta", detail, t0);
    }

    // 11
    t0 = clock_type::now();
    {
        std::vector<std::uint64_t> build_evals;
        double evals_4096 = 0;
        for (std::size_t n : {512u, 1024u, 2048u, 4096u}) {
            const auto pts = uniform_points(n, 2, 11);
            CoordinateSpace space(pts, MetricKind::euclidean);
            MetricSession s(space);
            const auto r = build(s);
            build_evals.push_back(r.trace.distance_evals);
            if (n == 4096) {
                const auto queries = uniform_points(200, 2, 12);
                std::uint64_t total = 0;
                for (std::size_t q = 0; q < queries.size(); ++q) {
                    MetricSession qs(space);
                    total += knn_search(r.tree, qs, queries[q], 5).trace.distance_evals;
                }
                evals_4096 = static_cast<double>(total) / static_cast<double>(queries.size());
            }
        }
        double worst_growth = 0;
        for (std::size_t j = 1; j < build_evals.size(); ++j) {
            worst_growth = std::max(worst_growth, static_cast<double>(build_evals[j]) /
                                                      static_cast<double>(build_evals[j - 1]));
        }
        report(11, evals_4096 < 4096.0 / 8 && worst_growth < 2.6, "scaling on uniform 2-D data",
               fmt("mean evals/query at 4096 = %.1f (limit 512), worst build growth per doubling %.3f (limit 2.6)",
                   evals_4096, worst_growth),
               t0);
    }

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
