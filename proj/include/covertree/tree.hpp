#ifndef COVERTREE_TREE_HPP
#define COVERTREE_TREE_HPP

#include <algorithm>
#include <climits>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "levels.hpp"
#include "metric.hpp"

/**
 * @file tree.hpp
 *
 * The compressed cover tree: one node per point, an integer level per node,
 * parent links and per-level child groups. Structure only; points live in
 * the metric space the tree was built over.
 */

namespace covertree {

/// Structural description of one node, as persisted.
struct NodeRecord {
    PointId id = 0;
    int level = 0;
    std::optional<PointId> parent;

    bool operator==(const NodeRecord&) const = default;
};

class CompressedCoverTree {
public:
    /// Children(p, j) keyed by level j, iterated from the highest level down.
    using ChildMap = std::map<int, std::vector<PointId>, std::greater<int>>;
    /// (essential level, |S_level(p)|), highest level first.
    using CountTable = std::vector<std::pair<int, std::size_t>>;

    CompressedCoverTree() = default;

    /// A tree holding only `root`.
    explicit CompressedCoverTree(PointId root, int root_level = 0) : root_(root), count_(1) {
        check_level(root_level);
        ensure_slot(root);
        nodes_[root].present = true;
        nodes_[root].level = root_level;
        min_level_ = root_level;
    }

    /**
     * Rebuilds a tree from persisted records. Throws ConsistencyError when the
     * records do not describe a rooted tree (unknown parent, second root,
     * cycle, duplicate id). Geometric conditions are left to validate().
     */
    static CompressedCoverTree from_records(PointId root, std::span<const NodeRecord> records) {
        CompressedCoverTree tree;
        tree.root_ = root;
        for (const auto& r : records) {
            check_level(r.level);
            tree.ensure_slot(r.id);
            if (tree.nodes_[r.id].present) {
                throw ConsistencyError("node " + std::to_string(r.id) + " listed twice");
            }
            tree.nodes_[r.id].present = true;
            tree.nodes_[r.id].level = r.level;
            tree.nodes_[r.id].parent = r.parent;
            ++tree.count_;
        }
        if (!tree.contains(root)) {
            throw ConsistencyError("root " + std::to_string(root) + " is not among the nodes");
        }
        if (tree.nodes_[root].parent) {
            throw ConsistencyError("root " + std::to_string(root) + " has a parent");
        }
        tree.min_level_ = tree.nodes_[root].level;
        for (const auto& r : records) {
            tree.min_level_ = std::min(tree.min_level_, r.level);
            if (r.id == root) {
                continue;
            }
            if (!r.parent) {
                throw ConsistencyError("node " + std::to_string(r.id) + " has no parent but is not the root");
            }
            if (!tree.contains(*r.parent) || *r.parent == r.id) {
                throw ConsistencyError("node " + std::to_string(r.id) + " has an invalid parent");
            }
            tree.nodes_[*r.parent].children[r.level].push_back(r.id);
            tree.max_nonroot_ = std::max(tree.max_nonroot_, r.level);
        }
        for (auto& node : tree.nodes_) {
            for (auto& group : node.children) {
                std::sort(group.second.begin(), group.second.end());
            }
        }
        // Every node must reach the root.
        std::vector<char> state(tree.nodes_.size(), 0);
        state[root] = 2;
        for (const auto& r : records) {
            std::vector<PointId> path;
            PointId cur = r.id;
            while (state[cur] == 0) {
                state[cur] = 1;
                path.push_back(cur);
                cur = *tree.nodes_[cur].parent;
            }
            if (state[cur] == 1) {
                throw ConsistencyError("cycle through node " + std::to_string(cur));
            }
            for (PointId p : path) {
                state[p] = 2;
            }
        }
        return tree;
    }

    std::vector<NodeRecord> records() const {
        std::vector<NodeRecord> out;
        out.reserve(count_);
        for (PointId i = 0; i < nodes_.size(); ++i) {
            if (nodes_[i].present) {
                out.push_back({i, nodes_[i].level, nodes_[i].parent});
            }
        }
        return out;
    }

    bool empty() const { return count_ == 0; }
    std::size_t size() const { return count_; }
    /// One past the largest id slot in use.
    std::size_t id_bound() const { return nodes_.size(); }
    PointId root() const { return root_; }

    bool contains(PointId p) const { return p < nodes_.size() && nodes_[p].present; }

    int level(PointId p) const { return node(p).level; }
    std::optional<PointId> parent(PointId p) const { return node(p).parent; }
    const ChildMap& children(PointId p) const { return node(p).children; }

    std::span<const PointId> children_at(PointId p, int j) const {
        const auto& ch = node(p).children;
        auto it = ch.find(j);
        if (it == ch.end()) {
            return {};
        }
        return it->second;
    }

    /// 1 + the highest non-root level (the root level for a single node).
    int l_max() const { return count_ > 1 ? max_nonroot_ + 1 : nodes_.at(root_).level; }
    int l_min() const { return min_level_; }

    /// Largest j < i with Children(p, j) non-empty, or l_min - 1.
    int next_level(PointId p, int i) const {
        const auto& ch = node(p).children;
        auto it = ch.upper_bound(i); // first key strictly below i
        return it == ch.end() ? l_min() - 1 : it->first;
    }

    /// Highest level holding a child of p.
    std::optional<int> max_child_level(PointId p) const {
        const auto& ch = node(p).children;
        if (ch.empty()) {
            return std::nullopt;
        }
        return ch.begin()->first;
    }

    /**
     * Links `child` under `parent` at `level` and resets the root level to
     * 1 + the highest non-root level. Geometric conditions are the caller's
     * responsibility. Invalidates the distinctive-descendant counts.
     */
    void attach(PointId child, PointId parent, int level) {
        check_level(level);
        if (child == parent || !contains(parent)) {
            throw InvariantError("attach: invalid parent " + std::to_string(parent));
        }
        ensure_slot(child);
        if (nodes_[child].present) {
            throw DuplicatePointError("point " + std::to_string(child) + " is already in the tree");
        }
        Node& n = nodes_[child];
        n.present = true;
        n.level = level;
        n.parent = parent;
        auto& group = nodes_[parent].children[level];
        group.insert(std::upper_bound(group.begin(), group.end(), child), child);
        ++count_;
        max_nonroot_ = std::max(max_nonroot_, level);
        min_level_ = std::min(min_level_, level);
        nodes_[root_].level = max_nonroot_ + 1;
        check_level(nodes_[root_].level);
        dd_valid_ = false;
    }

    /**
     * Fills |S_e(p)| for every node p and essential level e, in one pass
     * over the nodes: |S_e(p)| = |Descendants(p)| minus the subtrees of the
     * children whose level is at least e.
     */
    void compute_distinctive_counts() {
        std::vector<PointId> order;
        order.reserve(count_);
        for (PointId i = 0; i < nodes_.size(); ++i) {
            if (nodes_[i].present) {
                order.push_back(i);
            }
        }
        // Children sit strictly below their parent, so ascending level is a post-order.
        std::stable_sort(order.begin(), order.end(),
                         [&](PointId a, PointId b) { return effective_level(a) < effective_level(b); });
        for (PointId p : order) {
            Node& n = nodes_[p];
            std::size_t total = 1;
            for (const auto& [lvl, group] : n.children) {
                for (PointId c : group) {
                    total += nodes_[c].descendants;
                }
            }
            n.descendants = total;
            n.dd_counts.clear();
            n.dd_counts.emplace_back(n.level, total);
            std::size_t remaining = total;
            for (const auto& [lvl, group] : n.children) {
                for (PointId c : group) {
                    remaining -= nodes_[c].descendants;
                }
                if (lvl == n.level) {
                    // Only possible in an invalid tree; keep the table strictly decreasing.
                    n.dd_counts.back().second = remaining;
                } else {
                    n.dd_counts.emplace_back(lvl, remaining);
                }
            }
        }
        dd_valid_ = true;
    }

    bool has_distinctive_counts() const { return dd_valid_; }

    const CountTable& distinctive_count_table(PointId p) const {
        require_counts();
        return node(p).dd_counts;
    }

    /**
     * |S_i(p)|, read from the stored count at the smallest essential level
     * >= i. Levels above l(p) have no distinctive descendant set; 0 is
     * returned for them.
     */
    std::size_t distinctive_count(PointId p, int i) const {
        require_counts();
        const Node& n = node(p);
        if (i > n.level) {
            return 0;
        }
        const auto& table = n.dd_counts;
        auto it = std::partition_point(table.begin(), table.end(), [i](const auto& e) { return e.first >= i; });
        return std::prev(it)->second;
    }

    std::size_t descendant_count(PointId p) const {
        require_counts();
        return node(p).descendants;
    }

    std::vector<PointId> ids() const {
        std::vector<PointId> out;
        out.reserve(count_);
        for (PointId i = 0; i < nodes_.size(); ++i) {
            if (nodes_[i].present) {
                out.push_back(i);
            }
        }
        return out;
    }

private:
    struct Node {
        bool present = false;
        int level = 0;
        std::optional<PointId> parent;
        ChildMap children;
        CountTable dd_counts;
        std::size_t descendants = 0;
    };

    static void check_level(int level) {
        if (level < -kLevelLimit || level > kLevelLimit) {
            throw ParameterError("level " + std::to_string(level) + " outside the supported range");
        }
    }

    // Root sorts last even if a loaded tree gives it a low level.
    int effective_level(PointId p) const { return p == root_ ? INT_MAX : nodes_[p].level; }

    void ensure_slot(PointId p) {
        if (p >= nodes_.size()) {
            nodes_.resize(p + 1);
        }
    }

    const Node& node(PointId p) const {
        if (!contains(p)) {
            throw IndexError("point " + std::to_string(p) + " is not a node of the tree");
        }
        return nodes_[p];
    }

    void require_counts() const {
        if (!dd_valid_) {
            throw InvariantError("distinctive descendant counts are not computed; call compute_distinctive_counts()");
        }
    }

    std::vector<Node> nodes_;
    PointId root_ = 0;
    std::size_t count_ = 0;
    int max_nonroot_ = -kLevelLimit - 1;
    int min_level_ = 0;
    bool dd_valid_ = false;
};

// ---------------------------------------------------------------------------
// Level navigation and structural queries

inline int next_level(const CompressedCoverTree& tree, PointId p, int i) { return tree.next_level(p, i); }

/// C_i = {p : l(p) >= i}. The root belongs to every cover set.
inline std::vector<PointId> cover_set(const CompressedCoverTree& tree, int i) {
    std::vector<PointId> out;
    for (PointId p : tree.ids()) {
        if (p == tree.root() || tree.level(p) >= i) {
            out.push_back(p);
        }
    }
    return out;
}

/// E(p) = {l(p)} plus every level holding a child of p, highest first.
inline std::vector<int> essential_levels(const CompressedCoverTree& tree, PointId p) {
    std::vector<int> out{tree.level(p)};
    for (const auto& [lvl, group] : tree.children(p)) {
        if (lvl != out.back()) {
            out.push_back(lvl);
        }
    }
    return out;
}

struct HeightSet {
    std::vector<int> levels; ///< ascending

    std::size_t size() const { return levels.size(); }
    bool contains(int i) const { return std::binary_search(levels.begin(), levels.end(), i); }
};

/**
 * H = {i : C_{i-1} != C_i} plus l_max and l_min, with the root counted in
 * every cover set. A non-root point p enters at i = l(p) + 1.
 */
inline HeightSet height_set(const CompressedCoverTree& tree) {
    std::set<int> levels{tree.l_max(), tree.l_min()};
    for (PointId p : tree.ids()) {
        if (p != tree.root()) {
            levels.insert(tree.level(p) + 1);
        }
    }
    return HeightSet{std::vector<int>(levels.begin(), levels.end())};
}

/// Descendants(p), p included, in depth-first order.
inline std::vector<PointId> descendants(const CompressedCoverTree& tree, PointId p) {
    std::vector<PointId> out;
    std::vector<PointId> stack{p};
    while (!stack.empty()) {
        PointId cur = stack.back();
        stack.pop_back();
        out.push_back(cur);
        for (const auto& [lvl, group] : tree.children(cur)) {
            stack.insert(stack.end(), group.rbegin(), group.rend());
        }
    }
    return out;
}

/**
 * Reference enumeration of S_i(p): Descendants(p) minus the descendants of
 * every u in V_i(p) = {u in Descendants(p) : i <= l(u) <= l(p) - 1}.
 * Quadratic; used to check the fast paths. Empty for i > l(p).
 */
inline std::vector<PointId> distinctive_descendants(const CompressedCoverTree& tree, PointId p, int i) {
    if (i > tree.level(p)) {
        return {};
    }
    const auto all = descendants(tree, p);
    std::set<PointId> removed;
    for (PointId u : all) {
        const int lu = tree.level(u);
        if (u != p && i <= lu && lu <= tree.level(p) - 1) {
            for (PointId w : descendants(tree, u)) {
                removed.insert(w);
            }
        }
    }
    std::vector<PointId> out;
    for (PointId w : all) {
        if (!removed.count(w)) {
            out.push_back(w);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

/**
 * Node collector: p followed by the full subtrees of the children of p
 * whose level is below i. This is exactly S_i(p); every node is visited once.
 */
inline void collect_subtree(const CompressedCoverTree& tree, PointId p, int i, std::vector<PointId>& out) {
    out.push_back(p);
    std::vector<PointId> stack;
    const auto& ch = tree.children(p);
    for (auto it = ch.upper_bound(i); it != ch.end(); ++it) {
        stack.insert(stack.end(), it->second.begin(), it->second.end());
    }
    while (!stack.empty()) {
        PointId cur = stack.back();
        stack.pop_back();
        out.push_back(cur);
        for (const auto& [lvl, group] : tree.children(cur)) {
            stack.insert(stack.end(), group.begin(), group.end());
        }
    }
}

inline std::vector<PointId> collect_subtree(const CompressedCoverTree& tree, PointId p, int i) {
    std::vector<PointId> out;
    collect_subtree(tree, p, i, out);
    return out;
}

inline void count_distinctive_descendants(CompressedCoverTree& tree) { tree.compute_distinctive_counts(); }

// ---------------------------------------------------------------------------
// Validation

struct Violation {
    enum class Kind { structure, root, cover, separation };

    Kind kind;
    PointId a = 0;
    std::optional<PointId> b;
    int level = 0;
    std::string detail;
};

inline std::string_view to_string(Violation::Kind kind) {
    switch (kind) {
    case Violation::Kind::structure: return "structure";
    case Violation::Kind::root: return "root";
    case Violation::Kind::cover: return "cover";
    case Violation::Kind::separation: return "separation";
    }
    return "unknown";
}

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
};

/**
 * Checks the root, cover and separation conditions. A pair p, q shares
 * every cover set C_i with i <= min(l(p), l(q)), so separation reduces to
 * d(p, q) > 2^min(l(p), l(q)) for each pair; violations report that level.
 */
template <class Space>
ValidationReport validate(const CompressedCoverTree& tree, MetricSession<Space>& session) {
    ValidationReport report;
    auto add = [&](Violation::Kind kind, PointId a, std::optional<PointId> b, int level, std::string detail) {
        report.violations.push_back({kind, a, b, level, std::move(detail)});
    };
    const auto ids = tree.ids();
    if (ids.empty()) {
        return report;
    }
    for (PointId p : ids) {
        if (p >= session.size()) {
            add(Violation::Kind::structure, p, std::nullopt, 0, "node id outside the point set");
        }
    }
    if (!report.ok()) {
        return report;
    }

    const PointId root = tree.root();
    int max_other = INT_MIN;
    for (PointId p : ids) {
        if (p != root) {
            max_other = std::max(max_other, tree.level(p));
        }
    }
    if (ids.size() > 1 && tree.level(root) < max_other + 1) {
        add(Violation::Kind::root, root, std::nullopt, tree.level(root),
            "root level " + std::to_string(tree.level(root)) + " < 1 + " + std::to_string(max_other));
    }

    for (PointId q : ids) {
        if (q == root) {
            continue;
        }
        const PointId p = *tree.parent(q);
        const int lq = tree.level(q);
        if (!(lq < tree.level(p))) {
            add(Violation::Kind::cover, q, p, lq,
                "child level " + std::to_string(lq) + " not below parent level " + std::to_string(tree.level(p)));
        }
        const double d = session.distance(q, p);
        if (!(d <= pow2(lq + 1))) {
            add(Violation::Kind::cover, q, p, lq, "d = " + std::to_string(d) + " > 2^" + std::to_string(lq + 1));
        }
    }

    for (std::size_t x = 0; x < ids.size(); ++x) {
        for (std::size_t y = x + 1; y < ids.size(); ++y) {
            const PointId p = ids[x];
            const PointId q = ids[y];
            const int shared = std::min(tree.level(p), tree.level(q));
            const double d = session.distance(p, q);
            if (!(d > pow2(shared))) {
                add(Violation::Kind::separation, p, q, shared,
                    "d = " + std::to_string(d) + " <= 2^" + std::to_string(shared));
            }
        }
    }
    return report;
}

} // namespace covertree

#endif
