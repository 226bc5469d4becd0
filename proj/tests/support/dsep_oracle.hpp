#pragma once

// Brute-force d-separation oracle for tests: enumerate all simple paths
// in the skeleton and apply the blocking rules triple by triple.
// Deliberately independent of the reachability algorithm in the library.

#include <string>
#include <vector>

#include "fdi/dag.hpp"
#include "fdi/random.hpp"

namespace fdi_test {

struct PathOracle {
    const fdi::Dag& dag;
    std::vector<std::vector<bool>> edge;  // directed adjacency
    std::vector<std::vector<bool>> descendant_or_self;

    explicit PathOracle(const fdi::Dag& d) : dag(d) {
        const std::size_t n = dag.size();
        edge.assign(n, std::vector<bool>(n, false));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c : dag.children(i)) edge[i][c] = true;
        }
        descendant_or_self.assign(n, std::vector<bool>(n, false));
        for (std::size_t i = 0; i < n; ++i) mark_descendants(i, i);
    }

    void mark_descendants(std::size_t root, std::size_t node) {
        if (descendant_or_self[root][node]) return;
        descendant_or_self[root][node] = true;
        for (std::size_t c : dag.children(node)) mark_descendants(root, c);
    }

    bool path_blocked(const std::vector<std::size_t>& path, const std::vector<bool>& in_z) const {
        for (std::size_t k = 1; k + 1 < path.size(); ++k) {
            const std::size_t a = path[k - 1], b = path[k], c = path[k + 1];
            const bool collider = edge[a][b] && edge[c][b];
            if (collider) {
                bool opened = false;
                for (std::size_t d = 0; d < dag.size(); ++d) {
                    if (descendant_or_self[b][d] && in_z[d]) opened = true;
                }
                if (!opened) return true;
            } else {
                if (in_z[b]) return true;
            }
        }
        return false;
    }

    bool separated(std::size_t x, std::size_t y, const std::vector<bool>& in_z) const {
        std::vector<std::size_t> path = {x};
        std::vector<bool> used(dag.size(), false);
        used[x] = true;
        return !exists_active_path(path, used, y, in_z);
    }

    bool exists_active_path(std::vector<std::size_t>& path, std::vector<bool>& used, std::size_t y,
                            const std::vector<bool>& in_z) const {
        const std::size_t tip = path.back();
        if (tip == y) return !path_blocked(path, in_z);
        for (std::size_t next = 0; next < dag.size(); ++next) {
            if (used[next] || (!edge[tip][next] && !edge[next][tip])) continue;
            path.push_back(next);
            used[next] = true;
            if (exists_active_path(path, used, y, in_z)) return true;
            used[next] = false;
            path.pop_back();
        }
        return false;
    }
};

inline fdi::Dag random_dag(std::mt19937_64& rng, std::size_t max_nodes) {
    const std::size_t n = 2 + fdi::uniform_index(rng, max_nodes - 1);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) names.push_back("n" + std::to_string(i));
    // edges only from lower to higher index: acyclic by construction
    std::vector<std::pair<std::string, std::string>> edges;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (fdi::uniform01(rng) < 0.4) edges.emplace_back(names[i], names[j]);
        }
    }
    return fdi::Dag(names, edges);
}

}  // namespace fdi_test
