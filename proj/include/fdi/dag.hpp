#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fdi/errors.hpp"

namespace fdi {

// Directed acyclic graph over named variables. Nodes may be flagged
// hidden (latent); hidden nodes participate in separation queries but
// are excluded from the enumeration of observable statements.
class Dag {
public:
    Dag(std::vector<std::string> nodes, std::vector<std::pair<std::string, std::string>> edges,
        std::set<std::string> hidden = {}) {
        for (const auto& n : nodes) {
            if (index_of(n) != npos) throw Error(Errc::InvalidDag, "duplicate node: " + n);
            names_.push_back(n);
        }
        for (const auto& h : hidden) {
            if (index_of(h) == npos) throw Error(Errc::UnknownNode, "hidden node not declared: " + h);
        }
        hidden_ = std::move(hidden);
        parents_.resize(names_.size());
        children_.resize(names_.size());
        std::set<std::pair<std::size_t, std::size_t>> seen;
        for (const auto& [from, to] : edges) {
            const std::size_t a = checked_index(from);
            const std::size_t b = checked_index(to);
            if (a == b) throw Error(Errc::InvalidDag, "self-loop on " + from);
            if (!seen.insert({a, b}).second) {
                throw Error(Errc::InvalidDag, "duplicate edge " + from + " -> " + to);
            }
            children_[a].push_back(b);
            parents_[b].push_back(a);
        }
        topo_ = topological_order();  // throws on a cycle
    }

    std::size_t size() const { return names_.size(); }
    const std::vector<std::string>& nodes() const { return names_; }
    const std::string& name(std::size_t i) const { return names_[i]; }
    bool is_hidden(const std::string& n) const { return hidden_.count(n) > 0; }
    const std::vector<std::size_t>& parents(std::size_t i) const { return parents_[i]; }
    const std::vector<std::size_t>& children(std::size_t i) const { return children_[i]; }

    std::size_t checked_index(const std::string& n) const {
        const std::size_t i = index_of(n);
        if (i == npos) throw Error(Errc::UnknownNode, "unknown node: " + n);
        return i;
    }

    const std::vector<std::size_t>& topo() const { return topo_; }

private:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    std::size_t index_of(const std::string& n) const {
        const auto it = std::find(names_.begin(), names_.end(), n);
        return it == names_.end() ? npos : static_cast<std::size_t>(it - names_.begin());
    }

    // Kahn's algorithm, smallest node index first for a stable order.
    std::vector<std::size_t> topological_order() const {
        std::vector<std::size_t> indeg(size(), 0);
        for (std::size_t i = 0; i < size(); ++i) indeg[i] = parents_[i].size();
        std::set<std::size_t> ready;
        for (std::size_t i = 0; i < size(); ++i) {
            if (indeg[i] == 0) ready.insert(i);
        }
        std::vector<std::size_t> order;
        while (!ready.empty()) {
            const std::size_t n = *ready.begin();
            ready.erase(ready.begin());
            order.push_back(n);
            for (std::size_t c : children_[n]) {
                if (--indeg[c] == 0) ready.insert(c);
            }
        }
        if (order.size() != size()) throw Error(Errc::InvalidDag, "graph contains a cycle");
        return order;
    }

    std::vector<std::string> names_;
    std::set<std::string> hidden_;
    std::vector<std::vector<std::size_t>> parents_;
    std::vector<std::vector<std::size_t>> children_;
    std::vector<std::size_t> topo_;
};

struct Factor {
    std::string variable;
    std::vector<std::string> parents;
};

// The Bayesian-network factor list: each variable with its parent set,
// in topological order. The product of Pr(V | parents(V)) is the joint.
inline std::vector<Factor> factorization(const Dag& dag) {
    std::vector<Factor> out;
    for (std::size_t i : dag.topo()) {
        Factor f;
        f.variable = dag.name(i);
        std::vector<std::size_t> ps(dag.parents(i));
        std::sort(ps.begin(), ps.end());
        for (std::size_t p : ps) f.parents.push_back(dag.name(p));
        out.push_back(std::move(f));
    }
    return out;
}

namespace detail {

inline std::vector<bool> ancestor_closure(const Dag& dag, const std::vector<bool>& seed) {
    std::vector<bool> anc = seed;
    std::deque<std::size_t> queue;
    for (std::size_t i = 0; i < dag.size(); ++i) {
        if (anc[i]) queue.push_back(i);
    }
    while (!queue.empty()) {
        const std::size_t n = queue.front();
        queue.pop_front();
        for (std::size_t p : dag.parents(n)) {
            if (!anc[p]) {
                anc[p] = true;
                queue.push_back(p);
            }
        }
    }
    return anc;
}

}  // namespace detail

// Standard d-separation: true iff every path between x and y is blocked
// given z (chains and forks blocked by conditioning; colliders blocked
// unless the collider or one of its descendants is conditioned on).
// Implemented as reachability over (node, entry direction) states.
inline bool d_separated(const Dag& dag, const std::set<std::string>& x,
                        const std::set<std::string>& y, const std::set<std::string>& z) {
    std::vector<bool> in_x(dag.size(), false), in_y(dag.size(), false), in_z(dag.size(), false);
    for (const auto& n : x) in_x[dag.checked_index(n)] = true;
    for (const auto& n : y) in_y[dag.checked_index(n)] = true;
    for (const auto& n : z) in_z[dag.checked_index(n)] = true;
    for (std::size_t i = 0; i < dag.size(); ++i) {
        if ((in_x[i] && in_y[i]) || (in_x[i] && in_z[i]) || (in_y[i] && in_z[i])) {
            throw Error(Errc::InvalidArgument, "d-separation query sets must be disjoint");
        }
    }

    const std::vector<bool> z_ancestral = detail::ancestor_closure(dag, in_z);

    // state: node visited while moving up (towards parents) or down
    enum Dir { Up = 0, Down = 1 };
    std::vector<std::array<bool, 2>> visited(dag.size(), {false, false});
    std::deque<std::pair<std::size_t, Dir>> queue;
    for (std::size_t i = 0; i < dag.size(); ++i) {
        if (in_x[i]) queue.emplace_back(i, Up);
    }
    while (!queue.empty()) {
        const auto [n, dir] = queue.front();
        queue.pop_front();
        if (visited[n][dir]) continue;
        visited[n][dir] = true;
        if (!in_z[n] && in_y[n]) return false;

        if (dir == Up && !in_z[n]) {
            for (std::size_t p : dag.parents(n)) queue.emplace_back(p, Up);
            for (std::size_t c : dag.children(n)) queue.emplace_back(c, Down);
        } else if (dir == Down) {
            if (!in_z[n]) {
                for (std::size_t c : dag.children(n)) queue.emplace_back(c, Down);
            }
            if (z_ancestral[n]) {  // collider with conditioned descendant (or self)
                for (std::size_t p : dag.parents(n)) queue.emplace_back(p, Up);
            }
        }
    }
    return true;
}

struct IndependenceStatement {
    std::string x;
    std::string y;
    std::vector<std::string> given;
};

// All pairwise d-separation statements over the observed (non-hidden)
// nodes with conditioning sets up to the requested size.
inline std::vector<IndependenceStatement> implied_independencies(const Dag& dag,
                                                                 std::size_t max_conditioning) {
    std::vector<std::string> observed;
    for (const auto& n : dag.nodes()) {
        if (!dag.is_hidden(n)) observed.push_back(n);
    }
    std::sort(observed.begin(), observed.end());

    std::vector<IndependenceStatement> out;
    const std::size_t m = observed.size();
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = a + 1; b < m; ++b) {
            std::vector<std::string> pool;
            for (std::size_t c = 0; c < m; ++c) {
                if (c != a && c != b) pool.push_back(observed[c]);
            }
            const std::size_t k_max = std::min(max_conditioning, pool.size());
            for (std::size_t k = 0; k <= k_max; ++k) {
                // enumerate k-subsets of pool in lexicographic order
                std::vector<std::size_t> pick(k);
                for (std::size_t i = 0; i < k; ++i) pick[i] = i;
                while (true) {
                    std::set<std::string> given;
                    for (std::size_t i : pick) given.insert(pool[i]);
                    if (d_separated(dag, {observed[a]}, {observed[b]}, given)) {
                        out.push_back({observed[a], observed[b],
                                       std::vector<std::string>(given.begin(), given.end())});
                    }
                    if (k == 0) break;
                    // next combination
                    std::size_t i = k;
                    while (i > 0 && pick[i - 1] == pool.size() - k + i - 1) --i;
                    if (i == 0) break;
                    ++pick[i - 1];
                    for (std::size_t j = i; j < k; ++j) pick[j] = pick[j - 1] + 1;
                }
            }
        }
    }
    return out;
}

// --- file format -----------------------------------------------------------
//
// One `parent -> child` edge per line; `#` starts a comment. A node
// followed by `#hidden` (on an edge line or on a line of its own)
// is flagged hidden.

inline Dag parse_dag(std::istream& is) {
    std::vector<std::string> nodes;
    std::vector<std::pair<std::string, std::string>> edges;
    std::set<std::string> hidden;

    const auto add_node = [&](std::string token) {
        bool h = false;
        const auto pos = token.find("#hidden");
        if (pos != std::string::npos) {
            h = true;
            token = token.substr(0, pos);
        }
        while (!token.empty() && std::isspace(static_cast<unsigned char>(token.back()))) {
            token.pop_back();
        }
        std::size_t start = 0;
        while (start < token.size() && std::isspace(static_cast<unsigned char>(token[start]))) {
            ++start;
        }
        token = token.substr(start);
        if (token.empty()) throw Error(Errc::ParseError, "empty node name in DAG file");
        if (std::find(nodes.begin(), nodes.end(), token) == nodes.end()) nodes.push_back(token);
        if (h) hidden.insert(token);
        return token;
    };

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        // full-line comments (but keep the `#hidden` marker usable)
        std::string stripped = line;
        const auto first = stripped.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        if (stripped[first] == '#') continue;

        const auto arrow = stripped.find("->");
        if (arrow == std::string::npos) {
            add_node(stripped);
            continue;
        }
        const std::string from = add_node(stripped.substr(0, arrow));
        const std::string to = add_node(stripped.substr(arrow + 2));
        edges.emplace_back(from, to);
    }
    if (nodes.empty()) throw Error(Errc::ParseError, "DAG file declares no nodes");
    return Dag(std::move(nodes), std::move(edges), std::move(hidden));
}

inline Dag load_dag(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error(Errc::IoError, "cannot open for reading: " + path);
    return parse_dag(is);
}

inline void write_dag(std::ostream& os, const Dag& dag) {
    for (const auto& n : dag.nodes()) {
        if (dag.is_hidden(n)) os << n << " #hidden\n";
    }
    for (std::size_t i = 0; i < dag.size(); ++i) {
        bool any = false;
        for (std::size_t c : dag.children(i)) {
            os << dag.name(i) << " -> " << dag.name(c) << '\n';
            any = true;
        }
        if (!any && dag.parents(i).empty() && !dag.is_hidden(dag.name(i))) {
            os << dag.name(i) << '\n';  // isolated node
        }
    }
}

}  // namespace fdi
