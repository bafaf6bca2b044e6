// Command-line front end: build, query, validate, stats, bench.
//
// Exit codes: 0 ok, 1 validation or lemma-assertion failure, 2 parameter
// error, 3 I/O error.

#include <chrono>
#include <cstdio>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "covertree/covertree.hpp"

namespace ct = covertree;
using ct::json;

namespace {

constexpr int kOk = 0;
constexpr int kValidationFailure = 1;
constexpr int kParameterError = 2;
constexpr int kIoError = 3;

struct Common {
    std::string metric = "euclidean";
    std::string output;
    bool pretty = false;
};

void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
    } else {
        ct::write_text_file(path, text);
    }
}

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

ct::RootChoice parse_root(const std::string& root, std::uint64_t seed) {
    ct::RootChoice choice;
    choice.seed = seed;
    if (root == "first") {
        choice.policy = ct::RootPolicy::first;
    } else if (root == "random") {
        choice.policy = ct::RootPolicy::seeded;
    } else {
        std::size_t used = 0;
        unsigned long long idx = 0;
        try {
            idx = std::stoull(root, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != root.size() || root.empty() || root.front() == '-') {
            throw ct::ParameterError("--root must be 'first', 'random' or a point index, got '" + root + "'");
        }
        choice.policy = ct::RootPolicy::index;
        choice.index = static_cast<ct::PointId>(idx);
    }
    return choice;
}

void require_unique(const ct::PointSet& points) {
    const auto dedup = ct::deduplicate(points);
    if (dedup.removed > 0) {
        throw ct::DuplicatePointError(std::to_string(dedup.removed) +
                                      " duplicate rows; rerun with --dedup-output PATH to drop them");
    }
}

/// Loads a tree and checks that it matches the point file.
ct::CompressedCoverTree load_tree(const std::string& path, const ct::PointSet& points) {
    auto tree = ct::tree_from_json(ct::read_json_file(path));
    if (tree.size() != points.size()) {
        throw ct::ConsistencyError("tree has " + std::to_string(tree.size()) + " nodes but the point file has " +
                                   std::to_string(points.size()) + " rows");
    }
    if (tree.id_bound() > points.size()) {
        throw ct::ConsistencyError("tree references point ids beyond the point file");
    }
    tree.compute_distinctive_counts();
    return tree;
}

std::string table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        width[c] = header[c].size();
        for (const auto& r : rows) {
            width[c] = std::max(width[c], r[c].size());
        }
    }
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t c = 0; c < cells.size(); ++c) {
            out << (c ? "  " : "") << std::setw(static_cast<int>(width[c])) << cells[c];
        }
        out << '\n';
    };
    line(header);
    for (const auto& r : rows) {
        line(r);
    }
    return out.str();
}

std::string num(double v) {
    std::ostringstream s;
    s << std::setprecision(6) << v;
    return s.str();
}

// ---------------------------------------------------------------------------

struct BuildArgs {
    std::string input;
    std::string root = "first";
    std::uint64_t seed = 0;
    std::string trace;
    std::string dedup_output;
};

int run_build(const Common& common, const BuildArgs& args) {
    auto points = ct::read_csv_file(args.input);
    if (!args.dedup_output.empty()) {
        auto dedup = ct::deduplicate(points);
        std::ostringstream csv;
        ct::write_csv(csv, dedup.points);
        ct::write_text_file(args.dedup_output, csv.str());
        if (dedup.removed > 0) {
            std::cerr << "removed " << dedup.removed << " duplicate rows; tree ids refer to " << args.dedup_output
                      << "\n";
        }
        points = std::move(dedup.points);
    } else {
        require_unique(points);
    }
    ct::CoordinateSpace space(points, ct::parse_metric(common.metric));
    ct::MetricSession session(space);
    const auto result = ct::build(session, parse_root(args.root, args.seed));
    emit(common.output, dump(ct::tree_to_json(result.tree)));
    if (!args.trace.empty()) {
        ct::write_text_file(args.trace, dump(ct::build_trace_to_json(result.trace)));
    }
    return kOk;
}

// ---------------------------------------------------------------------------

struct QueryArgs {
    std::string tree;
    std::string points;
    std::string queries;
    std::size_t k = 1;
    std::optional<double> epsilon;
    std::string trace;
};

int run_query(const Common& common, const QueryArgs& args) {
    const auto points = ct::read_csv_file(args.points);
    const auto queries = ct::read_csv_file(args.queries);
    const auto tree = load_tree(args.tree, points);
    ct::CoordinateSpace space(points, ct::parse_metric(common.metric));
    ct::check_k(args.k, points.size());
    if (queries.dim() != points.dim()) {
        throw ct::ParameterError("queries have dimension " + std::to_string(queries.dim()) + ", points have " +
                                 std::to_string(points.dim()));
    }

    std::vector<ct::QueryOutcome> results;
    json traces = json::array();
    for (std::size_t row = 0; row < queries.size(); ++row) {
        ct::MetricSession session(space);
        ct::QueryOutcome outcome;
        outcome.row = row;
        ct::QueryTrace trace;
        if (args.epsilon) {
            auto r = ct::approx_knn(tree, session, queries[row], args.k, *args.epsilon);
            outcome.ids = r.answer.ids;
            outcome.distances = r.answer.distances;
            outcome.epsilon = r.answer.epsilon;
            outcome.exact_path = r.answer.exact_path;
            trace = std::move(r.trace);
        } else {
            auto r = ct::knn_search(tree, session, queries[row], args.k);
            outcome.ids = r.answer.ids;
            outcome.distances = r.answer.distances;
            trace = std::move(r.trace);
        }
        traces.push_back(ct::query_trace_to_json(row, trace));
        results.push_back(std::move(outcome));
    }
    if (common.pretty) {
        std::vector<std::vector<std::string>> rows;
        for (const auto& r : results) {
            for (std::size_t j = 0; j < r.ids.size(); ++j) {
                rows.push_back({std::to_string(r.row), std::to_string(j + 1), std::to_string(r.ids[j]),
                                ct::format_double(r.distances[j])});
            }
        }
        std::cout << table({"query", "rank", "id", "distance"}, rows);
        if (!common.output.empty()) {
            ct::write_text_file(common.output, ct::results_to_json(results));
        }
    } else {
        emit(common.output, ct::results_to_json(results));
    }
    if (!args.trace.empty()) {
        ct::write_text_file(args.trace, dump(traces));
    }
    return kOk;
}

// ---------------------------------------------------------------------------

struct ValidateArgs {
    std::string tree;
    std::string points;
};

int run_validate(const Common& common, const ValidateArgs& args) {
    const auto points = ct::read_csv_file(args.points);
    const auto tree = load_tree(args.tree, points);
    ct::CoordinateSpace space(points, ct::parse_metric(common.metric));
    ct::MetricSession session(space);
    const auto report = ct::validate(tree, session);
    if (common.pretty) {
        std::vector<std::vector<std::string>> rows;
        for (const auto& v : report.violations) {
            rows.push_back({std::string(ct::to_string(v.kind)), std::to_string(v.a),
                            v.b ? std::to_string(*v.b) : "-", std::to_string(v.level), v.detail});
        }
        std::cout << (report.ok() ? "ok\n" : table({"kind", "a", "b", "level", "detail"}, rows));
        if (!common.output.empty()) {
            ct::write_text_file(common.output, dump(ct::violations_to_json(report)));
        }
    } else {
        emit(common.output, dump(ct::violations_to_json(report)));
    }
    return report.ok() ? kOk : kValidationFailure;
}

// ---------------------------------------------------------------------------

struct StatsArgs {
    std::string input;
    std::string tree;
    std::string queries;
    std::size_t k = 1;
    bool cm_estimate = false;
    double xi = 0;
    std::vector<double> deltas;
    std::uint64_t seed = 0;
};

int run_stats(const Common& common, const StatsArgs& args) {
    const auto points = ct::read_csv_file(args.input);
    require_unique(points);
    const auto kind = ct::parse_metric(common.metric);
    ct::CoordinateSpace space(points, kind);
    ct::MetricSession session(space);

    ct::CompressedCoverTree tree;
    if (!args.tree.empty()) {
        tree = load_tree(args.tree, points);
    } else {
        tree = ct::build(session).tree;
    }

    std::vector<ct::QueryTrace> traces;
    if (!args.queries.empty()) {
        const auto queries = ct::read_csv_file(args.queries);
        ct::check_k(args.k, points.size());
        for (std::size_t row = 0; row < queries.size(); ++row) {
            ct::MetricSession qs(space);
            traces.push_back(ct::knn_search(tree, qs, queries[row], args.k).trace);
        }
    }
    ct::MetricSession diag(space);
    const auto report = ct::stats_report(diag, tree, traces);
    json doc = ct::report_to_json(report);
    doc["metric"] = std::string(ct::to_string(kind));
    doc["dim"] = points.dim();
    if (args.cm_estimate) {
        if (args.deltas.empty() || !(args.xi > 0)) {
            throw ct::ParameterError("--cm-estimate needs --xi and --deltas");
        }
        ct::CmOptions opts;
        opts.seed = args.seed;
        doc["cm_estimate"] = ct::cm_to_json(ct::cm_upper_estimate(points, kind, args.deltas, args.xi, opts));
    }
    if (common.pretty) {
        std::vector<std::vector<std::string>> rows;
        for (const auto& [key, value] : doc.items()) {
            if (value.is_primitive()) {
                rows.push_back({key, value.dump()});
            }
        }
        if (report.expansion) {
            rows.push_back({"c(R)", num(report.expansion->c)});
        }
        std::cout << table({"field", "value"}, rows);
        if (!common.output.empty()) {
            ct::write_text_file(common.output, dump(doc));
        }
    } else {
        emit(common.output, dump(doc));
    }
    return kOk;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
    std::vector<std::size_t> sizes{256, 512, 1024, 2048};
    std::size_t dim = 2;
    std::size_t k = 5;
    std::size_t repeat = 1;
    std::size_t queries = 100;
    std::string family = "uniform";
    std::uint64_t seed = 0;
    bool expansion = false;
    bool no_timing = false;
};

int run_bench(const Common& common, const BenchArgs& args) {
    using clock = std::chrono::steady_clock;
    const auto kind = ct::parse_metric(common.metric);
    const auto family = ct::parse_family(args.family);
    if (args.repeat < 1) {
        throw ct::ParameterError("--repeat must be at least 1");
    }
    auto sizes = args.sizes;
    std::sort(sizes.begin(), sizes.end());

    json rows = json::array();
    std::vector<std::vector<std::string>> pretty_rows;
    for (std::size_t n : sizes) {
        const auto points = ct::deduplicate(ct::generate(family, n, args.dim, args.seed)).points;
        const auto queries = ct::uniform_points(args.queries, args.dim, args.seed + 1);
        ct::CoordinateSpace space(points, kind);
        ct::check_k(args.k, points.size());

        double build_ms = 0;
        ct::BuildResult built;
        for (std::size_t r = 0; r < args.repeat; ++r) {
            ct::MetricSession session(space);
            const auto t0 = clock::now();
            built = ct::build(session);
            build_ms += std::chrono::duration<double, std::milli>(clock::now() - t0).count();
        }
        build_ms /= static_cast<double>(args.repeat);

        double query_ms = 0;
        double evals = 0;
        std::size_t max_l = 0;
        for (std::size_t r = 0; r < args.repeat; ++r) {
            const auto t0 = clock::now();
            for (std::size_t q = 0; q < queries.size(); ++q) {
                ct::MetricSession session(space);
                const auto res = ct::knn_search(built.tree, session, queries[q], args.k);
                if (r == 0) {
                    evals += static_cast<double>(res.trace.distance_evals);
                    max_l = std::max(max_l, res.trace.iterations());
                }
            }
            query_ms += std::chrono::duration<double, std::milli>(clock::now() - t0).count();
        }
        const double nq = static_cast<double>(std::max<std::size_t>(queries.size(), 1));
        query_ms /= static_cast<double>(args.repeat) * nq;
        evals /= nq;

        json row;
        row["size"] = points.size();
        if (!args.no_timing) {
            row["build_ms"] = build_ms;
            row["mean_query_ms"] = query_ms;
        }
        row["build_distance_evals"] = built.trace.distance_evals;
        row["mean_distance_evals"] = evals;
        row["max_iterations"] = max_l;
        row["height"] = ct::height_set(built.tree).size();
        std::string c_text = "-";
        if (args.expansion) {
            ct::MetricSession session(space);
            const double c = ct::expansion_constant(session).c;
            row["c"] = c;
            c_text = num(c);
        }
        rows.push_back(row);
        pretty_rows.push_back({std::to_string(points.size()), args.no_timing ? "-" : num(build_ms),
                               args.no_timing ? "-" : num(query_ms), num(evals),
                               std::to_string(built.trace.distance_evals), std::to_string(max_l),
                               std::to_string(ct::height_set(built.tree).size()), c_text});
    }
    json doc = {{"family", args.family}, {"dim", args.dim}, {"k", args.k}, {"metric", common.metric},
                {"seed", args.seed}, {"repeat", args.repeat}, {"queries", args.queries}, {"rows", rows}};
    if (common.pretty) {
        std::cout << table({"|R|", "build_ms", "query_ms", "evals/query", "build_evals", "max|L|", "|H|", "c(R)"},
                           pretty_rows);
        if (!common.output.empty()) {
            ct::write_text_file(common.output, dump(doc));
        }
    } else {
        emit(common.output, dump(doc));
    }
    return kOk;
}

int report_lemma_failures(int status) {
    if (!ct::debug_asserts_enabled()) {
        return status;
    }
    auto& reg = ct::LemmaRegistry::instance();
    if (reg.failed() == 0) {
        return status;
    }
    std::cerr << "lemma assertions failed: " << reg.failed() << " of " << reg.checks() << "\n";
    for (const auto& f : reg.failures()) {
        std::cerr << "  " << f.lemma << ": " << f.detail << "\n";
    }
    return status == kOk ? kValidationFailure : status;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Compressed cover tree: build, query, validate, stats, bench"};
    app.require_subcommand(1);
    Common common;

    auto add_common = [&](CLI::App* sub, bool with_metric = true) {
        if (with_metric) {
            sub->add_option("--metric", common.metric, "euclidean | manhattan | chebyshev")->capture_default_str();
        }
        sub->add_option("--output", common.output, "output path (stdout when omitted)");
        sub->add_flag("--pretty", common.pretty, "print a human-readable table");
    };

    BuildArgs build_args;
    auto* build = app.add_subcommand("build", "build a tree from a CSV point file");
    build->add_option("--input", build_args.input)->required();
    build->add_option("--root", build_args.root, "first | random | <index>")->capture_default_str();
    build->add_option("--seed", build_args.seed)->capture_default_str();
    build->add_option("--trace", build_args.trace, "write the construction trace here");
    build->add_option("--dedup-output", build_args.dedup_output, "drop duplicate rows, write the kept rows here");
    add_common(build);

    QueryArgs query_args;
    double epsilon = 0;
    auto* query = app.add_subcommand("query", "k-nearest-neighbor queries against a built tree");
    query->add_option("--tree", query_args.tree)->required();
    query->add_option("--points", query_args.points)->required();
    query->add_option("--queries", query_args.queries)->required();
    query->add_option("--k", query_args.k)->required();
    auto* eps_opt = query->add_option("--epsilon", epsilon, "approximation factor; exact search when omitted");
    query->add_option("--trace", query_args.trace, "write per-query traces here");
    add_common(query);

    ValidateArgs validate_args;
    auto* validate = app.add_subcommand("validate", "check the root, cover and separation conditions");
    validate->add_option("--tree", validate_args.tree)->required();
    validate->add_option("--points", validate_args.points)->required();
    add_common(validate);

    StatsArgs stats_args;
    std::string deltas_text;
    auto* stats = app.add_subcommand("stats", "expansion constant, aspect ratio, height and query statistics");
    stats->add_option("--input", stats_args.input)->required();
    stats->add_option("--tree", stats_args.tree, "use this tree instead of building one");
    stats->add_option("--queries", stats_args.queries, "queries to trace");
    stats->add_option("--k", stats_args.k)->capture_default_str();
    stats->add_flag("--cm-estimate", stats_args.cm_estimate, "run the grid-extension estimate");
    stats->add_option("--xi", stats_args.xi);
    stats->add_option("--deltas", deltas_text, "comma-separated decreasing lattice steps");
    stats->add_option("--seed", stats_args.seed)->capture_default_str();
    add_common(stats);

    BenchArgs bench_args;
    auto* bench = app.add_subcommand("bench", "size sweep over generated datasets");
    bench->add_option("--sizes", bench_args.sizes)->delimiter(',')->capture_default_str();
    bench->add_option("--dim", bench_args.dim)->capture_default_str();
    bench->add_option("--k", bench_args.k)->capture_default_str();
    bench->add_option("--repeat", bench_args.repeat)->capture_default_str();
    bench->add_option("--queries", bench_args.queries, "queries per size")->capture_default_str();
    bench->add_option("--family", bench_args.family, "uniform | clustered | outlier")->capture_default_str();
    bench->add_option("--seed", bench_args.seed)->capture_default_str();
    bench->add_flag("--expansion", bench_args.expansion, "also compute c(R) per size");
    bench->add_flag("--no-timing", bench_args.no_timing, "omit wall-clock columns");
    add_common(bench);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kParameterError;
    }

    try {
        int status = kOk;
        if (*build) {
            status = run_build(common, build_args);
        } else if (*query) {
            if (eps_opt->count() > 0) {
                query_args.epsilon = epsilon;
            }
            status = run_query(common, query_args);
        } else if (*validate) {
            status = run_validate(common, validate_args);
        } else if (*stats) {
            if (!deltas_text.empty()) {
                std::stringstream in(deltas_text);
                std::string tok;
                while (std::getline(in, tok, ',')) {
                    const auto v = ct::detail::parse_double(ct::detail::trim(tok));
                    if (!v) {
                        throw ct::ParameterError("--deltas: '" + tok + "' is not a number");
                    }
                    stats_args.deltas.push_back(*v);
                }
            }
            status = run_stats(common, stats_args);
        } else if (*bench) {
            status = run_bench(common, bench_args);
        }
        return report_lemma_failures(status);
    } catch (const ct::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIoError;
    } catch (const ct::InvariantError& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kValidationFailure;
    } catch (const ct::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kParameterError;
    }
}
