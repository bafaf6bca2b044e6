#ifndef COVERTREE_IO_HPP
#define COVERTREE_IO_HPP

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "build.hpp"
#include "diagnostics.hpp"
#include "errors.hpp"
#include "metric.hpp"
#include "search.hpp"
#include "tree.hpp"

namespace covertree {

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) {
            return out;
        }
        start = comma + 1;
    }
}

inline std::optional<double> parse_double(std::string_view token) {
    if (!token.empty() && token.front() == '+') {
        token.remove_prefix(1);
    }
    double value = 0;
    const auto* end = token.data() + token.size();
    const auto res = std::from_chars(token.data(), end, value);
    if (token.empty() || res.ec != std::errc() || res.ptr != end || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

} // namespace detail

/**
 * One point per line, comma-separated decimals. A first line whose first
 * token is not a number is taken as a header. Blank lines are skipped.
 * Errors carry the 1-based line number.
 */
inline PointSet read_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    std::optional<PointSet> points;
    std::vector<double> row;
    bool first_content = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) {
            continue;
        }
        const auto tokens = detail::split_commas(line);
        if (first_content) {
            first_content = false;
            if (!detail::parse_double(tokens.front())) {
                continue;
            }
        }
        row.clear();
        for (const auto& tok : tokens) {
            const auto v = detail::parse_double(tok);
            if (!v) {
                throw ParseError("'" + std::string(tok) + "' is not a finite number",
                                 line_no);
            }
            row.push_back(*v);
        }
        if (!points) {
            points.emplace(row.size());
        } else if (row.size() != points->dim()) {
            throw ParseError("expected " + std::to_string(points->dim()) +
                                 " columns, found " + std::to_string(row.size()),
                             line_no);
        }
        points->push_back(row);
    }
    if (in.bad()) {
        throw IoError("read failure");
    }
    if (!points) {
        throw ParseError("no data rows", line_no);
    }
    return std::move(*points);
}

inline PointSet read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    try {
        return read_csv(in);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.detail(), e.row());
    }
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_csv(std::ostream& out, const PointSet& points) {
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto p = points[i];
        for (std::size_t a = 0; a < p.size(); ++a) {
            out << (a ? "," : "") << format_double(p[a]);
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// JSON artifacts

using nlohmann::json;

inline json tree_to_json(const CompressedCoverTree& tree) {
    json nodes = json::array();
    for (const auto& r : tree.records()) {
        nodes.push_back({{"id", r.id}, {"level", r.level}, {"parent", r.parent ? json(*r.parent) : json(nullptr)}});
    }
    return {{"root", tree.root()}, {"l_max", tree.l_max()}, {"l_min", tree.l_min()}, {"nodes", std::move(nodes)}};
}

/// Structure only; ConsistencyError when the document is not a rooted tree.
inline CompressedCoverTree tree_from_json(const json& doc) {
    try {
        if (!doc.is_object() || !doc.contains("root") || !doc.contains("nodes") || !doc.at("nodes").is_array()) {
            throw ConsistencyError("tree document needs \"root\" and a \"nodes\" array");
        }
        std::vector<NodeRecord> records;
        for (const auto& n : doc.at("nodes")) {
            NodeRecord r;
            r.id = n.at("id").get<PointId>();
            r.level = n.at("level").get<int>();
            if (n.contains("parent") && !n.at("parent").is_null()) {
                r.parent = n.at("parent").get<PointId>();
            }
            records.push_back(r);
        }
        return CompressedCoverTree::from_records(doc.at("root").get<PointId>(), records);
    } catch (const json::exception& e) {
        throw ConsistencyError(std::string("malformed tree document: ") + e.what());
    }
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw IoError(path + ": " + e.what());
    }
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path);
    }
    out << text;
    if (!out) {
        throw IoError("write failure on " + path);
    }
}

inline json build_trace_to_json(const BuildTrace& trace) {
    json ins = json::array();
    for (const auto& i : trace.insertions) {
        ins.push_back({{"point", i.point}, {"levels", i.levels}, {"frontier_sizes", i.frontier_sizes}});
    }
    return {{"insertions", std::move(ins)}, {"distance_evals", trace.distance_evals}};
}

inline json query_trace_to_json(std::size_t row, const QueryTrace& t) {
    return {{"query", row},
            {"levels", t.levels},
            {"frontier_sizes", t.frontier_sizes},
            {"cover_sizes", t.cover_sizes},
            {"special_level", t.special_level ? json(*t.special_level) : json(nullptr)},
            {"distance_evals", t.distance_evals},
            {"collected", t.collected}};
}

struct QueryOutcome {
    std::size_t row = 0;
    std::vector<PointId> ids;
    std::vector<double> distances;
    std::optional<double> epsilon;
    bool exact_path = true;
};

/// Results list with every distance printed to 17 significant digits.
inline std::string results_to_json(const std::vector<QueryOutcome>& results) {
    std::ostringstream out;
    out << "[";
    for (std::size_t r = 0; r < results.size(); ++r) {
        const auto& q = results[r];
        out << (r ? ",\n " : "\n ") << "{\"query\": " << q.row << ", \"ids\": [";
        for (std::size_t j = 0; j < q.ids.size(); ++j) {
            out << (j ? ", " : "") << q.ids[j];
        }
        out << "], \"distances\": [";
        for (std::size_t j = 0; j < q.distances.size(); ++j) {
            out << (j ? ", " : "") << format_double(q.distances[j]);
        }
        out << "]";
        if (q.epsilon) {
            out << ", \"epsilon\": " << format_double(*q.epsilon) << ", \"exact_path\": " << (q.exact_path ? "true" : "false");
        }
        out << "}";
    }
    out << (results.empty() ? "]\n" : "\n]\n");
    return out.str();
}

inline json violations_to_json(const ValidationReport& report) {
    json list = json::array();
    for (const auto& v : report.violations) {
        list.push_back({{"kind", std::string(to_string(v.kind))},
                        {"a", v.a},
                        {"b", v.b ? json(*v.b) : json(nullptr)},
                        {"level", v.level},
                        {"detail", v.detail}});
    }
    return {{"ok", report.ok()}, {"violations", std::move(list)}};
}

inline json expansion_to_json(const ExpansionReport& e) {
    return {{"c", e.c},
            {"max_ratio", e.max_ratio},
            {"witness", {{"point", e.witness_point}, {"radius", e.witness_radius}}},
            {"inner_count", e.inner_count},
            {"outer_count", e.outer_count}};
}

inline json report_to_json(const DiagnosticsReport& r) {
    json doc;
    doc["points"] = r.points;
    if (r.expansion) {
        doc["expansion_constant"] = expansion_to_json(*r.expansion);
    }
    auto opt = [&](const char* key, const std::optional<double>& v) {
        if (v) {
            doc[key] = *v;
        }
    };
    opt("aspect_ratio", r.aspect_ratio);
    opt("diameter", r.diameter);
    opt("d_min", r.d_min);
    doc["height"] = r.height;
    opt("height_bound", r.height_bound);
    doc["l_max"] = r.l_max;
    doc["l_min"] = r.l_min;
    json hist = json::object();
    for (const auto& [w, count] : r.width_histogram) {
        hist[std::to_string(w)] = count;
    }
    doc["width_histogram"] = std::move(hist);
    doc["max_width"] = r.max_width;
    if (r.queries) {
        doc["queries"] = {{"count", r.queries->count},
                          {"mean_iterations", r.queries->mean_iterations},
                          {"max_iterations", r.queries->max_iterations},
                          {"mean_distance_evals", r.queries->mean_distance_evals},
                          {"max_distance_evals", r.queries->max_distance_evals}};
    }
    return doc;
}

inline json cm_to_json(const std::vector<CmEstimate>& estimates) {
    json list = json::array();
    for (const auto& e : estimates) {
        list.push_back({{"delta", e.delta}, {"value", e.value}, {"centers", e.centers}, {"center", e.center},
                        {"radius", e.radius}});
    }
    return list;
}

} // namespace covertree

#endif
