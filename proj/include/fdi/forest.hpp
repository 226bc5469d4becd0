#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "fdi/circuit.hpp"
#include "fdi/errors.hpp"
#include "fdi/fsm.hpp"
#include "fdi/random.hpp"

namespace fdi {

inline std::vector<std::string> feature_columns() { return {"V0", "V1", "V2", "T", "S1"}; }

// Per-sample feature rows with class labels. T is the time since the
// most recent switch transition of the originating trace.
struct FeatureMatrix {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;              // index into classes
    std::vector<std::string> classes;     // ordered class names

    std::size_t n_rows() const { return rows.size(); }
    std::size_t n_features() const { return columns.size(); }
};

// Feature rows of one trace: (V0, V1, V2, T, S1) per sample from the
// first switch transition onward; earlier samples have no defined T
// and are dropped.
inline std::vector<std::vector<double>> trace_feature_rows(const Trace& trace) {
    const auto transitions = switch_transitions(trace);
    if (transitions.empty()) {
        throw Error(Errc::NoTransition, "trace has no switch transition; T is undefined");
    }
    std::vector<std::vector<double>> rows;
    std::size_t next_tr = 0;
    double last_tr_time = transitions[0].t;
    for (const auto& s : trace.samples) {
        if (s.t < transitions[0].t) continue;
        while (next_tr < transitions.size() && transitions[next_tr].t <= s.t) {
            last_tr_time = transitions[next_tr].t;
            ++next_tr;
        }
        rows.push_back({s.v0, s.v1, s.v2, s.t - last_tr_time, static_cast<double>(s.s1)});
    }
    return rows;
}

inline FeatureMatrix build_features(const std::vector<Trace>& traces) {
    FeatureMatrix fm;
    fm.columns = feature_columns();

    // canonical class order: Healthy, R0Down, CapUp (present ones only)
    std::vector<Label> present;
    for (Label l : {Label::Healthy, Label::R0Down, Label::CapUp}) {
        for (const auto& tr : traces) {
            if (tr.label && *tr.label == l) {
                present.push_back(l);
                break;
            }
        }
    }
    for (Label l : present) fm.classes.push_back(label_name(l));

    for (const auto& tr : traces) {
        if (!tr.label) throw Error(Errc::MissingLabel, "feature building requires labeled traces");
        const int cls = static_cast<int>(
            std::find(present.begin(), present.end(), *tr.label) - present.begin());
        for (auto& row : trace_feature_rows(tr)) {
            fm.rows.push_back(std::move(row));
            fm.labels.push_back(cls);
        }
    }
    return fm;
}

// Gini impurity 1 - sum((c_i/n)^2).
inline double gini(const std::vector<std::size_t>& class_counts) {
    std::size_t n = 0;
    for (auto c : class_counts) n += c;
    if (n == 0) throw Error(Errc::EmptyNode, "gini of an empty node");
    double acc = 0.0;
    for (auto c : class_counts) {
        const double p = static_cast<double>(c) / static_cast<double>(n);
        acc += p * p;
    }
    return 1.0 - acc;
}

struct ForestConfig {
    int n_trees = 100;
    int max_depth = 8;
    int min_leaf = 5;
    int feature_subsample = 3;  // features considered per split
    bool bootstrap = true;
    std::uint64_t seed = 42;

    void validate(std::size_t n_features) const {
        if (n_trees < 1 || max_depth < 1 || min_leaf < 1) {
            throw Error(Errc::ConfigError, "forest sizes must be >= 1");
        }
        if (feature_subsample < 1 || static_cast<std::size_t>(feature_subsample) > n_features) {
            throw Error(Errc::ConfigError, "feature_subsample must be in [1, n_features]");
        }
    }
};

struct TreeNode {
    bool leaf = true;
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<double> dist;  // leaf class distribution, sums to 1
};

struct Tree {
    std::vector<TreeNode> nodes;
};

struct Forest {
    std::vector<Tree> trees;
    ForestConfig config;
    std::vector<std::string> classes;
    std::size_t n_features = 0;
};

namespace detail {

struct TreeGrower {
    const FeatureMatrix& fm;
    const ForestConfig& cfg;
    std::mt19937_64& rng;
    std::size_t n_classes;
    Tree tree;

    std::vector<double> leaf_distribution(const std::vector<std::size_t>& idx) const {
        std::vector<double> dist(n_classes, 0.0);
        for (auto i : idx) dist[static_cast<std::size_t>(fm.labels[i])] += 1.0;
        for (auto& d : dist) d /= static_cast<double>(idx.size());
        return dist;
    }

    int grow(std::vector<std::size_t>& idx, int depth) {
        std::vector<std::size_t> counts(n_classes, 0);
        for (auto i : idx) ++counts[static_cast<std::size_t>(fm.labels[i])];
        const bool pure = std::count_if(counts.begin(), counts.end(),
                                        [](std::size_t c) { return c > 0; }) <= 1;

        const int node_id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        if (pure || depth >= cfg.max_depth ||
            idx.size() < 2 * static_cast<std::size_t>(cfg.min_leaf)) {
            tree.nodes[node_id].dist = leaf_distribution(idx);
            return node_id;
        }

        // feature subset without replacement, examined in index order
        std::vector<std::size_t> features(fm.n_features());
        std::iota(features.begin(), features.end(), 0);
        for (int k = 0; k < cfg.feature_subsample; ++k) {
            const std::size_t j = k + uniform_index(rng, features.size() - k);
            std::swap(features[k], features[j]);
        }
        features.resize(static_cast<std::size_t>(cfg.feature_subsample));
        std::sort(features.begin(), features.end());

        double best_impurity = std::numeric_limits<double>::infinity();
        std::size_t best_feature = 0;
        double best_threshold = 0.0;

        std::vector<std::pair<double, int>> vals(idx.size());
        for (std::size_t f : features) {
            for (std::size_t i = 0; i < idx.size(); ++i) {
                vals[i] = {fm.rows[idx[i]][f], fm.labels[idx[i]]};
            }
            std::sort(vals.begin(), vals.end());
            std::vector<double> left(n_classes, 0.0);
            std::vector<double> right(n_classes, 0.0);
            for (const auto& v : vals) right[static_cast<std::size_t>(v.second)] += 1.0;
            const double n = static_cast<double>(vals.size());
            for (std::size_t p = 1; p < vals.size(); ++p) {
                const auto cls = static_cast<std::size_t>(vals[p - 1].second);
                left[cls] += 1.0;
                right[cls] -= 1.0;
                if (vals[p].first == vals[p - 1].first) continue;
                if (p < static_cast<std::size_t>(cfg.min_leaf) ||
                    vals.size() - p < static_cast<std::size_t>(cfg.min_leaf)) {
                    continue;
                }
                double gl = 1.0, gr = 1.0;
                const double nl = static_cast<double>(p), nr = n - nl;
                for (std::size_t c = 0; c < n_classes; ++c) {
                    gl -= (left[c] / nl) * (left[c] / nl);
                    gr -= (right[c] / nr) * (right[c] / nr);
                }
                const double weighted = (nl * gl + nr * gr) / n;
                if (weighted < best_impurity) {
                    best_impurity = weighted;
                    best_feature = f;
                    best_threshold = 0.5 * (vals[p - 1].first + vals[p].first);
                }
            }
        }

        if (!std::isfinite(best_impurity)) {
            tree.nodes[node_id].dist = leaf_distribution(idx);
            return node_id;
        }

        std::vector<std::size_t> left_idx;
        std::vector<std::size_t> right_idx;
        for (auto i : idx) {
            (fm.rows[i][best_feature] < best_threshold ? left_idx : right_idx).push_back(i);
        }
        tree.nodes[node_id].leaf = false;
        tree.nodes[node_id].feature = static_cast<int>(best_feature);
        tree.nodes[node_id].threshold = best_threshold;
        const int l = grow(left_idx, depth + 1);
        const int r = grow(right_idx, depth + 1);
        tree.nodes[node_id].left = l;
        tree.nodes[node_id].right = r;
        return node_id;
    }
};

}  // namespace detail

// Greedy CART-style training. Fully deterministic given (data, config):
// each tree draws from its own derived seed, so growing order (or a
// parallel schedule) cannot change the result.
inline Forest train(const FeatureMatrix& fm, const ForestConfig& cfg) {
    cfg.validate(fm.n_features());
    const int n_classes = static_cast<int>(fm.classes.size());
    {
        std::vector<bool> seen(static_cast<std::size_t>(n_classes), false);
        for (int l : fm.labels) seen[static_cast<std::size_t>(l)] = true;
        if (std::count(seen.begin(), seen.end(), true) < 2) {
            throw Error(Errc::SingleClass, "training requires at least two classes");
        }
    }
    if (fm.n_rows() < 2 * static_cast<std::size_t>(cfg.min_leaf)) {
        throw Error(Errc::InsufficientData, "too few rows to grow a tree");
    }

    Forest forest;
    forest.config = cfg;
    forest.classes = fm.classes;
    forest.n_features = fm.n_features();
    forest.trees.reserve(static_cast<std::size_t>(cfg.n_trees));
    for (int i = 0; i < cfg.n_trees; ++i) {
        std::mt19937_64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
        std::vector<std::size_t> idx(fm.n_rows());
        if (cfg.bootstrap) {
            for (auto& v : idx) v = uniform_index(rng, fm.n_rows());
        } else {
            std::iota(idx.begin(), idx.end(), 0);
        }
        detail::TreeGrower grower{fm, cfg, rng, static_cast<std::size_t>(n_classes), {}};
        grower.grow(idx, 0);
        forest.trees.push_back(std::move(grower.tree));
    }
    return forest;
}

struct Prediction {
    int cls = 0;
    std::vector<double> distribution;
};

inline Prediction predict(const Forest& forest, const std::vector<double>& row) {
    if (row.size() != forest.n_features) {
        throw Error(Errc::ShapeError, "feature vector length does not match the forest");
    }
    std::vector<double> dist(forest.classes.size(), 0.0);
    for (const auto& tree : forest.trees) {
        int node = 0;
        while (!tree.nodes[static_cast<std::size_t>(node)].leaf) {
            const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
            node = row[static_cast<std::size_t>(nd.feature)] < nd.threshold ? nd.left : nd.right;
        }
        const auto& leaf = tree.nodes[static_cast<std::size_t>(node)].dist;
        for (std::size_t c = 0; c < dist.size(); ++c) dist[c] += leaf[c];
    }
    for (auto& d : dist) d /= static_cast<double>(forest.trees.size());
    Prediction p;
    p.distribution = dist;
    for (std::size_t c = 1; c < dist.size(); ++c) {
        if (dist[c] > dist[static_cast<std::size_t>(p.cls)]) p.cls = static_cast<int>(c);
    }
    return p;
}

inline double accuracy(const Forest& forest, const FeatureMatrix& fm) {
    if (fm.n_rows() == 0) throw Error(Errc::InsufficientData, "accuracy of an empty set");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < fm.n_rows(); ++i) {
        hits += predict(forest, fm.rows[i]).cls == fm.labels[i];
    }
    return static_cast<double>(hits) / static_cast<double>(fm.n_rows());
}

// Deterministic stratified row split; `holdout_frac` of each class goes
// to the second matrix.
inline std::pair<FeatureMatrix, FeatureMatrix> stratified_split(const FeatureMatrix& fm,
                                                                double holdout_frac,
                                                                std::uint64_t seed) {
    if (!(holdout_frac > 0.0) || !(holdout_frac < 1.0)) {
        throw Error(Errc::InvalidArgument, "holdout fraction must be in (0,1)");
    }
    std::vector<std::size_t> holdout_rows;
    for (std::size_t c = 0; c < fm.classes.size(); ++c) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < fm.n_rows(); ++i) {
            if (fm.labels[i] == static_cast<int>(c)) idx.push_back(i);
        }
        if (idx.empty()) continue;
        std::mt19937_64 rng(derive_seed(seed, c));
        shuffle_indices(idx, rng);
        const auto n_hold = static_cast<std::size_t>(
            std::llround(holdout_frac * static_cast<double>(idx.size())));
        holdout_rows.insert(holdout_rows.end(), idx.begin(),
                            idx.begin() + static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, n_hold)));
    }
    std::sort(holdout_rows.begin(), holdout_rows.end());
    FeatureMatrix train_fm, test_fm;
    train_fm.columns = test_fm.columns = fm.columns;
    train_fm.classes = test_fm.classes = fm.classes;
    std::size_t h = 0;
    for (std::size_t i = 0; i < fm.n_rows(); ++i) {
        const bool hold = h < holdout_rows.size() && holdout_rows[h] == i;
        if (hold) ++h;
        auto& dst = hold ? test_fm : train_fm;
        dst.rows.push_back(fm.rows[i]);
        dst.labels.push_back(fm.labels[i]);
    }
    return {std::move(train_fm), std::move(test_fm)};
}

// Mean held-out accuracy drop after permuting one feature column,
// clamped at zero. A column that is constant over the held-out set
// scores exactly zero.
inline std::vector<double> permutation_importance(const Forest& forest, const FeatureMatrix& fm,
                                                  int n_repeats, std::uint64_t seed) {
    if (n_repeats < 1) throw Error(Errc::InvalidArgument, "n_repeats must be >= 1");
    if (fm.n_rows() == 0) throw Error(Errc::InsufficientData, "empty held-out set");
    const double baseline = accuracy(forest, fm);
    std::vector<double> importances(fm.n_features(), 0.0);
    for (std::size_t col = 0; col < fm.n_features(); ++col) {
        double drop_sum = 0.0;
        for (int rep = 0; rep < n_repeats; ++rep) {
            std::mt19937_64 rng(derive_seed(seed, col * 1000003ULL + static_cast<std::uint64_t>(rep)));
            std::vector<double> shuffled(fm.n_rows());
            for (std::size_t i = 0; i < fm.n_rows(); ++i) shuffled[i] = fm.rows[i][col];
            shuffle_indices(shuffled, rng);
            std::size_t hits = 0;
            std::vector<double> row;
            for (std::size_t i = 0; i < fm.n_rows(); ++i) {
                row = fm.rows[i];
                row[col] = shuffled[i];
                hits += predict(forest, row).cls == fm.labels[i];
            }
            drop_sum += baseline - static_cast<double>(hits) / static_cast<double>(fm.n_rows());
        }
        importances[col] = std::max(0.0, drop_sum / n_repeats);
    }
    return importances;
}

// One FSM row per fault class: the permutation importances of a binary
// forest trained on {fault} vs {Healthy} over a stratified 70/30 split.
inline FaultSignatureMatrix build_eb_fsm(const std::vector<Trace>& traces, const ForestConfig& cfg,
                                         int n_repeats = 10) {
    const FeatureMatrix all = build_features(traces);
    const auto healthy_it = std::find(all.classes.begin(), all.classes.end(), "Healthy");
    if (healthy_it == all.classes.end()) {
        throw Error(Errc::MissingBaseline, "EB FSM requires Healthy traces as the baseline class");
    }
    const int healthy_cls = static_cast<int>(healthy_it - all.classes.begin());
    if (all.classes.size() < 2) {
        throw Error(Errc::SingleClass, "EB FSM requires at least one fault class");
    }

    std::vector<std::string> fault_names;
    std::vector<std::vector<double>> fields;
    for (std::size_t c = 0; c < all.classes.size(); ++c) {
        if (static_cast<int>(c) == healthy_cls) continue;
        FeatureMatrix sub;
        sub.columns = all.columns;
        sub.classes = {"Healthy", all.classes[c]};
        for (std::size_t i = 0; i < all.n_rows(); ++i) {
            if (all.labels[i] != healthy_cls && all.labels[i] != static_cast<int>(c)) continue;
            sub.rows.push_back(all.rows[i]);
            sub.labels.push_back(all.labels[i] == healthy_cls ? 0 : 1);
        }
        ForestConfig sub_cfg = cfg;
        sub_cfg.seed = derive_seed(cfg.seed, 0xEB00 + c);
        const auto [train_fm, test_fm] = stratified_split(sub, 0.3, derive_seed(cfg.seed, 0x5B00 + c));
        const Forest forest = train(train_fm, sub_cfg);
        fields.push_back(permutation_importance(forest, test_fm, n_repeats,
                                                derive_seed(cfg.seed, 0x1400 + c)));
        fault_names.push_back(all.classes[c]);
    }
    return {std::move(fault_names), all.columns, std::move(fields), FsmKind::ExperienceBased};
}

// --- model file -----------------------------------------------------------

inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void save_forest(std::ostream& os, const Forest& forest) {
    os << "fdi-forest v1\n";
    os << "classes " << forest.classes.size();
    for (const auto& c : forest.classes) os << ' ' << c;
    os << '\n';
    os << "features " << forest.n_features << '\n';
    const auto& c = forest.config;
    os << "config n_trees=" << c.n_trees << " max_depth=" << c.max_depth
       << " min_leaf=" << c.min_leaf << " feature_subsample=" << c.feature_subsample
       << " bootstrap=" << (c.bootstrap ? 1 : 0) << " seed=" << c.seed << '\n';
    os << "trees " << forest.trees.size() << '\n';
    for (std::size_t t = 0; t < forest.trees.size(); ++t) {
        const auto& tree = forest.trees[t];
        os << "tree " << t << ' ' << tree.nodes.size() << '\n';
        for (std::size_t n = 0; n < tree.nodes.size(); ++n) {
            const auto& nd = tree.nodes[n];
            if (nd.leaf) {
                os << n << " leaf";
                for (double d : nd.dist) os << ' ' << format_g17(d);
                os << '\n';
            } else {
                os << n << " split " << nd.feature << ' ' << format_g17(nd.threshold) << ' '
                   << nd.left << ' ' << nd.right << '\n';
            }
        }
    }
}

inline void save_forest(const std::string& path, const Forest& forest) {
    std::ofstream os(path);
    if (!os) throw Error(Errc::IoError, "cannot open for writing: " + path);
    save_forest(os, forest);
}

inline Forest load_forest(std::istream& is) {
    const auto fail = [](const std::string& why) -> Error {
        return Error(Errc::ParseError, "bad forest file: " + why);
    };
    std::string line;
    if (!std::getline(is, line) || line != "fdi-forest v1") throw fail("missing version header");

    Forest forest;
    std::size_t n_classes = 0, n_trees = 0;
    {
        if (!std::getline(is, line)) throw fail("missing classes line");
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag >> n_classes) || tag != "classes") throw fail("classes line");
        std::string name;
        while (ls >> name) forest.classes.push_back(name);
        if (forest.classes.size() != n_classes) throw fail("class count mismatch");
    }
    {
        if (!std::getline(is, line)) throw fail("missing features line");
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag >> forest.n_features) || tag != "features") throw fail("features line");
    }
    {
        if (!std::getline(is, line)) throw fail("missing config line");
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag != "config") throw fail("config line");
        std::string kv;
        auto& c = forest.config;
        while (ls >> kv) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw fail("config entry " + kv);
            const std::string key = kv.substr(0, eq);
            const std::string val = kv.substr(eq + 1);
            try {
                if (key == "n_trees") c.n_trees = std::stoi(val);
                else if (key == "max_depth") c.max_depth = std::stoi(val);
                else if (key == "min_leaf") c.min_leaf = std::stoi(val);
                else if (key == "feature_subsample") c.feature_subsample = std::stoi(val);
                else if (key == "bootstrap") c.bootstrap = val != "0";
                else if (key == "seed") c.seed = std::stoull(val);
                else throw fail("unknown config key " + key);
            } catch (const std::logic_error&) {
                throw fail("config value " + kv);
            }
        }
    }
    {
        if (!std::getline(is, line)) throw fail("missing trees line");
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag >> n_trees) || tag != "trees") throw fail("trees line");
    }
    for (std::size_t t = 0; t < n_trees; ++t) {
        if (!std::getline(is, line)) throw fail("missing tree header");
        std::istringstream ls(line);
        std::string tag;
        std::size_t id = 0, n_nodes = 0;
        if (!(ls >> tag >> id >> n_nodes) || tag != "tree" || id != t) throw fail("tree header");
        Tree tree;
        tree.nodes.resize(n_nodes);
        for (std::size_t n = 0; n < n_nodes; ++n) {
            if (!std::getline(is, line)) throw fail("truncated tree");
            std::istringstream ns(line);
            std::size_t node_id = 0;
            std::string kind;
            if (!(ns >> node_id >> kind) || node_id != n) throw fail("node record");
            TreeNode nd;
            if (kind == "split") {
                nd.leaf = false;
                if (!(ns >> nd.feature >> nd.threshold >> nd.left >> nd.right)) {
                    throw fail("split record");
                }
                // children always follow their parent (preorder), which also
                // rules out cycles in a hand-edited file
                if (nd.feature < 0 || static_cast<std::size_t>(nd.feature) >= forest.n_features ||
                    nd.left <= static_cast<int>(n) || nd.right <= static_cast<int>(n) ||
                    static_cast<std::size_t>(nd.left) >= n_nodes ||
                    static_cast<std::size_t>(nd.right) >= n_nodes) {
                    throw fail("split indices out of range");
                }
            } else if (kind == "leaf") {
                double p = 0.0;
                while (ns >> p) nd.dist.push_back(p);
                if (nd.dist.size() != forest.classes.size()) throw fail("leaf distribution size");
            } else {
                throw fail("node kind " + kind);
            }
            tree.nodes[n] = std::move(nd);
        }
        forest.trees.push_back(std::move(tree));
    }
    return forest;
}

inline Forest load_forest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error(Errc::IoError, "cannot open for reading: " + path);
    return load_forest(is);
}

}  // namespace fdi
