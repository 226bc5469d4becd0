#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "fdi/forest.hpp"
#include "fdi/pipeline.hpp"

using Catch::Approx;
using namespace fdi;

namespace {

// two well-separated blobs on feature 0, a noise column on feature 1
FeatureMatrix toy_two_class(std::size_t n_per_class, std::uint64_t seed) {
    FeatureMatrix fm;
    fm.columns = {"x", "noise"};
    fm.classes = {"lo", "hi"};
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < n_per_class; ++i) {
        fm.rows.push_back({-1.0 + 0.1 * gaussian(rng), gaussian(rng)});
        fm.labels.push_back(0);
        fm.rows.push_back({2.0 + 0.1 * gaussian(rng), gaussian(rng)});
        fm.labels.push_back(1);
    }
    return fm;
}

ForestConfig small_cfg() {
    ForestConfig cfg;
    cfg.n_trees = 25;
    cfg.feature_subsample = 2;
    cfg.seed = 7;
    return cfg;
}

}  // namespace

TEST_CASE("gini impurity") {
    REQUIRE(gini({10, 10}) == Approx(0.5));
    REQUIRE(gini({10, 0}) == 0.0);
    REQUIRE(gini({3, 3, 4}) == Approx(0.66));
    REQUIRE_THROWS_AS(gini({0, 0}), Error);
}

TEST_CASE("feature rows start at the first transition with relative time") {
    SimConfig cfg;
    cfg.duration = 40.0;
    auto mk = [&](const std::optional<FaultSpec>& f, Label l) {
        Trace t = simulate(CircuitParams::nominal(), SwitchSchedule{}, f, std::nullopt, cfg);
        t.label = l;
        return t;
    };
    const std::vector<Trace> traces = {mk(std::nullopt, Label::Healthy),
                                       mk(FaultSpec::r0_drift(0.5), Label::R0Down),
                                       mk(FaultSpec::capacitance_drift(2.0), Label::CapUp)};
    const auto fm = build_features(traces);
    REQUIRE(fm.classes == std::vector<std::string>{"Healthy", "R0Down", "CapUp"});
    REQUIRE(fm.columns == std::vector<std::string>{"V0", "V1", "V2", "T", "S1"});
    // samples from t = 10.0 to 40.0 inclusive, per trace
    REQUIRE(fm.n_rows() == 3 * 301);
    // transition samples carry T = 0
    REQUIRE(fm.rows[0][3] == 0.0);
    // T resets at each transition, never reaching the half period
    for (const auto& row : fm.rows) {
        REQUIRE(row[3] >= 0.0);
        REQUIRE(row[3] < 10.0);
    }

    SECTION("unlabeled trace is rejected") {
        auto unlabeled = traces;
        unlabeled[0].label.reset();
        REQUIRE_THROWS_AS(build_features(unlabeled), Error);
    }
    SECTION("trace without a transition is rejected") {
        SimConfig short_cfg;
        short_cfg.duration = 5.0;
        Trace t = simulate(CircuitParams::nominal(), SwitchSchedule{}, std::nullopt, std::nullopt,
                           short_cfg);
        t.label = Label::Healthy;
        REQUIRE_THROWS_AS(build_features({t}), Error);
    }
}

TEST_CASE("training fits separable data and validates its contract") {
    const auto fm = toy_two_class(50, 3);
    const auto forest = train(fm, small_cfg());
    REQUIRE(accuracy(forest, fm) == 1.0);

    // structural invariants: split indices in range, leaf sums ~ 1
    for (const auto& tree : forest.trees) {
        for (const auto& node : tree.nodes) {
            if (node.leaf) {
                double sum = 0.0;
                for (double d : node.dist) sum += d;
                REQUIRE(sum == Approx(1.0).margin(1e-9));
            } else {
                REQUIRE(node.feature >= 0);
                REQUIRE(static_cast<std::size_t>(node.feature) < fm.n_features());
            }
        }
    }

    SECTION("single class is rejected") {
        FeatureMatrix single = fm;
        for (auto& l : single.labels) l = 0;
        REQUIRE_THROWS_AS(train(single, small_cfg()), Error);
    }
    SECTION("too few rows are rejected") {
        FeatureMatrix tiny;
        tiny.columns = fm.columns;
        tiny.classes = fm.classes;
        tiny.rows = {fm.rows[0], fm.rows[1]};
        tiny.labels = {0, 1};
        auto cfg = small_cfg();
        cfg.min_leaf = 5;
        REQUIRE_THROWS_AS(train(tiny, cfg), Error);
    }
    SECTION("constant features yield a majority stump, not a crash") {
        FeatureMatrix constant;
        constant.columns = {"a"};
        constant.classes = {"x", "y"};
        for (int i = 0; i < 30; ++i) {
            constant.rows.push_back({1.0});
            constant.labels.push_back(i < 20 ? 0 : 1);
        }
        auto cfg = small_cfg();
        cfg.feature_subsample = 1;
        const auto stump = train(constant, cfg);
        const auto pred = predict(stump, {1.0});
        REQUIRE(pred.cls == 0);  // majority class
        REQUIRE(pred.distribution[0] > pred.distribution[1]);
    }
    SECTION("bad config is rejected") {
        auto cfg = small_cfg();
        cfg.feature_subsample = 3;  // > n_features = 2
        REQUIRE_THROWS_AS(train(fm, cfg), Error);
    }
}

TEST_CASE("training-set purity with unbounded depth and distinct rows") {
    DatasetConfig ds;
    ds.traces_per_class = 4;
    const auto traces = make_case_study_traces(CircuitParams::nominal(), SwitchSchedule{}, ds, 11);
    const auto fm = build_features(traces);
    ForestConfig cfg;
    cfg.n_trees = 10;
    cfg.max_depth = 64;
    cfg.min_leaf = 1;
    cfg.bootstrap = false;
    cfg.seed = 5;
    const auto forest = train(fm, cfg);
    REQUIRE(accuracy(forest, fm) == 1.0);
}

TEST_CASE("prediction semantics") {
    SECTION("single tree returns its leaf distribution") {
        Forest f;
        f.classes = {"a", "b"};
        f.n_features = 1;
        Tree t;
        TreeNode leaf;
        leaf.dist = {0.2, 0.8};
        t.nodes.push_back(leaf);
        f.trees.push_back(t);
        const auto p = predict(f, {0.0});
        REQUIRE(p.cls == 1);
        REQUIRE(p.distribution == std::vector<double>{0.2, 0.8});
    }
    SECTION("ties break to the lowest class index") {
        Forest f;
        f.classes = {"a", "b"};
        f.n_features = 1;
        for (auto probs : {std::vector<double>{1.0, 0.0}, std::vector<double>{0.0, 1.0}}) {
            Tree t;
            TreeNode leaf;
            leaf.dist = probs;
            t.nodes.push_back(leaf);
            f.trees.push_back(t);
        }
        REQUIRE(predict(f, {0.0}).cls == 0);
    }
    SECTION("row length must match") {
        const auto forest = train(toy_two_class(20, 1), small_cfg());
        REQUIRE_THROWS_AS(predict(forest, {1.0, 2.0, 3.0}), Error);
    }
    SECTION("scaling all leaf distributions does not change the argmax") {
        const auto fm = toy_two_class(30, 9);
        auto forest = train(fm, small_cfg());
        auto scaled = forest;
        for (auto& tree : scaled.trees) {
            for (auto& node : tree.nodes) {
                for (auto& d : node.dist) d *= 7.5;
            }
        }
        for (const auto& row : fm.rows) {
            REQUIRE(predict(forest, row).cls == predict(scaled, row).cls);
        }
    }
}

TEST_CASE("training and importance are bit-reproducible") {
    DatasetConfig ds;
    ds.traces_per_class = 6;
    const auto traces = make_case_study_traces(CircuitParams::nominal(), SwitchSchedule{}, ds, 21);
    const auto fm = build_features(traces);
    ForestConfig cfg;
    cfg.n_trees = 20;
    cfg.seed = 77;

    const auto a = train(fm, cfg);
    const auto b = train(fm, cfg);
    std::ostringstream sa, sb;
    save_forest(sa, a);
    save_forest(sb, b);
    REQUIRE(sa.str() == sb.str());

    const auto [train_fm, test_fm] = stratified_split(fm, 0.3, 99);
    const auto ia = permutation_importance(a, test_fm, 5, 123);
    const auto ib = permutation_importance(b, test_fm, 5, 123);
    REQUIRE(ia == ib);

    SECTION("different seeds give different forests") {
        auto cfg2 = cfg;
        cfg2.seed = 78;
        const auto c = train(fm, cfg2);
        std::ostringstream sc;
        save_forest(sc, c);
        REQUIRE(sa.str() != sc.str());
    }
}

TEST_CASE("permutation importance separates signal from noise") {
    // feature 0 decides the class, feature 1 is pure noise
    const auto fm = toy_two_class(120, 17);
    const auto [train_fm, test_fm] = stratified_split(fm, 0.3, 5);
    const auto forest = train(train_fm, small_cfg());
    const auto imp = permutation_importance(forest, test_fm, 10, 31);
    REQUIRE(imp[0] > 0.3);     // permuting the informative feature destroys accuracy
    REQUIRE(imp[1] < 0.01);    // permuting noise changes nothing in expectation

    SECTION("a constant held-out column scores exactly zero") {
        FeatureMatrix constant = test_fm;
        for (auto& row : constant.rows) row[1] = 3.14;
        const auto imp2 = permutation_importance(forest, constant, 10, 31);
        REQUIRE(imp2[1] == 0.0);
    }
    SECTION("contract checks") {
        REQUIRE_THROWS_AS(permutation_importance(forest, test_fm, 0, 1), Error);
        FeatureMatrix empty;
        empty.columns = fm.columns;
        empty.classes = fm.classes;
        REQUIRE_THROWS_AS(permutation_importance(forest, empty, 5, 1), Error);
    }
}

TEST_CASE("stratified split is deterministic and preserves class balance") {
    const auto fm = toy_two_class(50, 23);
    const auto [a_train, a_test] = stratified_split(fm, 0.3, 11);
    const auto [b_train, b_test] = stratified_split(fm, 0.3, 11);
    REQUIRE(a_train.rows == b_train.rows);
    REQUIRE(a_test.rows == b_test.rows);
    REQUIRE(a_test.n_rows() == 30);  // 15 per class
    const auto count = [](const FeatureMatrix& m, int cls) {
        return std::count(m.labels.begin(), m.labels.end(), cls);
    };
    REQUIRE(count(a_test, 0) == 15);
    REQUIRE(count(a_test, 1) == 15);
    REQUIRE_THROWS_AS(stratified_split(fm, 0.0, 1), Error);
}

TEST_CASE("experience-based FSM has one importance row per fault") {
    DatasetConfig ds;
    ds.traces_per_class = 8;
    const auto traces = make_case_study_traces(CircuitParams::nominal(), SwitchSchedule{}, ds, 42);
    ForestConfig cfg;
    cfg.n_trees = 30;
    const auto fsm = build_eb_fsm(traces, cfg);
    REQUIRE(fsm.kind() == FsmKind::ExperienceBased);
    REQUIRE(fsm.faults() == std::vector<std::string>{"R0Down", "CapUp"});
    REQUIRE(fsm.features() == feature_columns());
    for (const auto& row : fsm.fields()) {
        for (double v : row) REQUIRE(v >= 0.0);
    }

    SECTION("missing healthy baseline is rejected") {
        std::vector<Trace> faults_only;
        for (const auto& t : traces) {
            if (t.label != Label::Healthy) faults_only.push_back(t);
        }
        REQUIRE_THROWS_AS(build_eb_fsm(faults_only, cfg), Error);
    }
}

TEST_CASE("model files round-trip") {
    const auto fm = toy_two_class(40, 29);
    const auto forest = train(fm, small_cfg());
    std::ostringstream os;
    save_forest(os, forest);
    std::istringstream is(os.str());
    const auto loaded = load_forest(is);
    REQUIRE(loaded.classes == forest.classes);
    REQUIRE(loaded.n_features == forest.n_features);
    REQUIRE(loaded.trees.size() == forest.trees.size());
    for (const auto& row : fm.rows) {
        const auto a = predict(forest, row);
        const auto b = predict(loaded, row);
        REQUIRE(a.cls == b.cls);
        REQUIRE(a.distribution == b.distribution);
    }
    std::ostringstream os2;
    save_forest(os2, loaded);
    REQUIRE(os.str() == os2.str());

    SECTION("corrupt files are rejected") {
        std::istringstream bad1("not a forest\n");
        REQUIRE_THROWS_AS(load_forest(bad1), Error);
        std::istringstream bad2("fdi-forest v1\nclasses 2 a\n");
        REQUIRE_THROWS_AS(load_forest(bad2), Error);
    }
}
