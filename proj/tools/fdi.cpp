// fdi: fault detection and isolation workbench for the switched R-R-C
// circuit. Subcommands cover scenario simulation, residual evaluation,
// classifier training and explanation, FSM analysis, DAG queries and
// maturity reports.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fdi/config.hpp"
#include "fdi/csv.hpp"
#include "fdi/dag.hpp"
#include "fdi/errors.hpp"
#include "fdi/forest.hpp"
#include "fdi/fsm.hpp"
#include "fdi/independence.hpp"
#include "fdi/maturity.hpp"
#include "fdi/pipeline.hpp"
#include "fdi/residuals.hpp"
#include "fdi/simulate.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "run configuration file (key = value sections)")
            ->check(CLI::ExistingFile);
        auto* s = cmd->add_option("--seed", "default seed for noise / training");
        s->envname("FDI_SEED");
        s->each([this](const std::string& v) {
            try {
                std::size_t pos = 0;
                seed = std::stoull(v, &pos);
                if (pos != v.size()) throw std::invalid_argument(v);
            } catch (const std::exception&) {
                throw CLI::ValidationError("--seed", "'" + v + "' is not a valid seed");
            }
        });
    }

    fdi::RunConfig load() const {
        fdi::RunConfig cfg;
        if (!config_path.empty()) cfg = fdi::RunConfig::load(config_path);
        if (seed) {
            cfg.noise.seed = *seed;
            cfg.forest.seed = *seed;
            cfg.dataset.seed = *seed;
        }
        return cfg;
    }
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream os(path);
    if (!os) throw fdi::Error(fdi::Errc::IoError, "cannot open for writing: " + path);
    os << content;
}

// simulate ------------------------------------------------------------------

struct SimulateArgs {
    CommonOpts common;
    std::string out = "trace.csv";
    std::string computed;
    std::string label;
    bool append = false;
    std::string fault_target;
    std::optional<double> fault_factor, fault_onset, sigma, duration, sample_rate, period, duty;
    std::optional<int> start_state;
    std::string method;
};

int run_simulate(const SimulateArgs& a) {
    fdi::RunConfig cfg = a.common.load();
    if (!a.fault_target.empty()) {
        if (a.fault_target == "none") cfg.fault.target = fdi::FaultTarget::None;
        else if (a.fault_target == "r0") cfg.fault.target = fdi::FaultTarget::R0;
        else if (a.fault_target == "c") cfg.fault.target = fdi::FaultTarget::Elastance;
        else throw fdi::Error(fdi::Errc::ConfigError, "--fault-target must be none|r0|c");
    }
    if (a.fault_factor) cfg.fault.factor = *a.fault_factor;
    if (a.fault_onset) cfg.fault.onset = *a.fault_onset;
    if (a.sigma) cfg.noise.sigma_volts = *a.sigma;
    if (a.duration) cfg.sim.duration = *a.duration;
    if (a.sample_rate) cfg.sim.sample_rate = *a.sample_rate;
    if (a.period) cfg.schedule.period = *a.period;
    if (a.duty) cfg.schedule.duty = *a.duty;
    if (a.start_state) cfg.schedule.start_state = *a.start_state;
    if (!a.method.empty()) {
        if (a.method == "closed_form") cfg.sim.method = fdi::SimMethod::ClosedForm;
        else if (a.method == "rk4") cfg.sim.method = fdi::SimMethod::RungeKutta4;
        else throw fdi::Error(fdi::Errc::ConfigError, "--method must be closed_form|rk4");
    }
    cfg.validate();

    fdi::Trace trace = fdi::simulate(cfg.circuit, cfg.schedule, cfg.fault, cfg.noise, cfg.sim);
    if (!a.label.empty()) {
        const auto l = fdi::label_from_name(a.label);
        if (!l) throw fdi::Error(fdi::Errc::ConfigError, "--label must be Healthy|R0Down|CapUp");
        trace.label = l;
    }
    fdi::write_trace_csv(a.out, {trace}, a.append);
    std::cout << "wrote " << trace.size() << " samples to " << a.out << '\n';

    if (!a.computed.empty()) {
        // reference curve of the healthy design model, noise-free
        const fdi::Trace model =
            fdi::simulate(cfg.circuit, cfg.schedule, std::nullopt, std::nullopt, cfg.sim);
        fdi::write_trace_csv(a.computed, {model});
        std::cout << "wrote computed reference curve to " << a.computed << '\n';
    }
    return 0;
}

// residuals -----------------------------------------------------------------

struct ResidualArgs {
    CommonOpts common;
    std::string trace_path;
    std::string out;
};

int run_residuals(const ResidualArgs& a) {
    const fdi::RunConfig cfg = a.common.load();
    const auto traces = fdi::read_traces_csv(a.trace_path);
    if (traces.size() > 1) {
        std::cout << "note: file holds " << traces.size() << " traces, evaluating the first\n";
    }
    const fdi::Trace& trace = traces.front();

    const auto rt = fdi::evaluate_residuals(trace, cfg.circuit, cfg.thresholds);
    if (!a.out.empty()) {
        fdi::write_residual_csv(a.out, rt);
        std::cout << "wrote residuals to " << a.out << '\n';
    }

    double max_r1 = 0.0, max_r2 = 0.0;
    for (std::size_t i = 0; i < rt.size(); ++i) {
        max_r1 = std::max(max_r1, std::fabs(rt.r1[i]));
        if (rt.valid2[i]) max_r2 = std::max(max_r2, std::fabs(rt.r2[i]));
    }
    std::cout << "max |r1|: " << fdi::format_g9(max_r1) << " A, max |r2|: " << fdi::format_g9(max_r2)
              << " V\n";

    const fdi::MbVerdict v = fdi::mb_verdict(trace, cfg.circuit, cfg.thresholds);
    std::cout << "activation: ARR_1=" << v.activation[0] << " ARR_2=" << v.activation[1] << '\n';
    if (!v.fault_detected) {
        std::cout << "no fault detected\n";
        return 0;
    }
    if (v.isolation.matches.empty()) {
        std::cout << "unknown signature; nearest:";
        for (const auto& n : v.isolation.nearest) std::cout << ' ' << n;
        std::cout << " (hamming " << v.isolation.nearest_distance << ")\n";
        return 0;
    }

    std::cout << "isolated: " << v.isolation.matches.front();
    if (v.label == fdi::Label::R0Down) {
        const double r0 = fdi::identify_r0(trace, rt, cfg.circuit);
        std::cout << "; R0 ~ " << fdi::format_g9(r0) << " ohm (nominal "
                  << fdi::format_g9(cfg.circuit.r0) << ")";
    } else if (v.label == fdi::Label::CapUp) {
        // first usable decay window: from a transition with a positive,
        // shrinking v0 - v2 gap
        const auto transitions = fdi::switch_transitions(trace);
        const double t_last = trace.samples.back().t;
        for (std::size_t k = 0; k < transitions.size(); ++k) {
            const double t_s = transitions[k].t;
            double t_end = k + 1 < transitions.size() ? transitions[k + 1].t : t_last + 1.0;
            t_end = std::min(t_end - 1e-9, t_s + 8.0);
            t_end = std::min(t_end, t_last);
            try {
                const double tau = fdi::identify_time_constant(trace, cfg.circuit, t_s, t_end);
                const double c_factor = tau * cfg.circuit.elastance / (cfg.circuit.r0 + cfg.circuit.r1);
                std::cout << "; tau ~ " << fdi::format_g9(tau) << " s (c_factor ~ "
                          << fdi::format_g9(c_factor) << ")";
                break;
            } catch (const fdi::Error&) {
                continue;  // try the next transition window
            }
        }
    }
    std::cout << '\n';
    return 0;
}

// train / classify / importance ---------------------------------------------

struct TrainArgs {
    CommonOpts common;
    std::string dataset;
    std::string model = "model.txt";
    double holdout = 0.0;
};

int run_train(const TrainArgs& a) {
    const fdi::RunConfig cfg = a.common.load();
    const auto traces = fdi::read_traces_csv(a.dataset);
    const fdi::FeatureMatrix fm = fdi::build_features(traces);
    if (a.holdout > 0.0) {
        const auto [train_fm, test_fm] =
            fdi::stratified_split(fm, a.holdout, fdi::derive_seed(cfg.forest.seed, 0x517EULL));
        const fdi::Forest forest = fdi::train(train_fm, cfg.forest);
        fdi::save_forest(a.model, forest);
        std::cout << "trained " << forest.trees.size() << " trees on " << train_fm.n_rows()
                  << " rows; held-out accuracy: " << fdi::format_g9(fdi::accuracy(forest, test_fm))
                  << '\n';
    } else {
        const fdi::Forest forest = fdi::train(fm, cfg.forest);
        fdi::save_forest(a.model, forest);
        std::cout << "trained " << forest.trees.size() << " trees on " << fm.n_rows() << " rows\n";
    }
    std::cout << "model written to " << a.model << '\n';
    return 0;
}

struct ClassifyArgs {
    CommonOpts common;
    std::string model;
    std::string dataset;
    std::string out;
};

int run_classify(const ClassifyArgs& a) {
    const fdi::Forest forest = fdi::load_forest(a.model);
    const auto traces = fdi::read_traces_csv(a.dataset);

    std::ostringstream os;
    os << "trace,row,predicted";
    for (const auto& c : forest.classes) os << ",p_" << c;
    bool labeled = true;
    for (const auto& tr : traces) labeled = labeled && tr.label.has_value();
    if (labeled) os << ",label";
    os << '\n';

    std::size_t hits = 0, total = 0;
    for (std::size_t t = 0; t < traces.size(); ++t) {
        const auto rows = fdi::trace_feature_rows(traces[t]);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto pred = fdi::predict(forest, rows[i]);
            os << t << ',' << i << ',' << forest.classes[static_cast<std::size_t>(pred.cls)];
            for (double p : pred.distribution) os << ',' << fdi::format_g9(p);
            if (labeled) {
                const std::string truth = fdi::label_name(*traces[t].label);
                os << ',' << truth;
                ++total;
                hits += forest.classes[static_cast<std::size_t>(pred.cls)] == truth;
            }
            os << '\n';
        }
        std::cout << "trace " << t << ": majority verdict "
                  << fdi::eb_majority_verdict(forest, traces[t]) << '\n';
    }
    if (!a.out.empty()) {
        write_file(a.out, os.str());
        std::cout << "wrote predictions to " << a.out << '\n';
    }
    if (labeled && total > 0) {
        std::cout << "accuracy: " << fdi::format_g9(static_cast<double>(hits) / total) << '\n';
    }
    return 0;
}

struct ImportanceArgs {
    CommonOpts common;
    std::string dataset;
    std::string out;
};

int run_importance(const ImportanceArgs& a) {
    const fdi::RunConfig cfg = a.common.load();
    const auto traces = fdi::read_traces_csv(a.dataset);
    const fdi::FaultSignatureMatrix fsm = fdi::build_eb_fsm(traces, cfg.forest);
    const std::string table = fdi::fsm_to_table(fsm);
    std::cout << table;
    if (!a.out.empty()) {
        write_file(a.out, table);
        std::cout << "wrote EB FSM to " << a.out << '\n';
    }
    return 0;
}

// fsm -----------------------------------------------------------------------

int run_fsm_mb() {
    std::cout << fdi::fsm_to_table(fdi::case_study_mb_fsm());
    return 0;
}

int run_fsm_analyze(const std::string& path, double threshold) {
    const auto raw = fdi::fsm_from_file(path, fdi::FsmKind::ExperienceBased);
    const auto fsm = fdi::binarize(raw, threshold);
    for (const auto& fault : fsm.faults()) {
        const bool det = fdi::detectable(fsm, fault);
        const bool iso = fdi::isolable(fsm, fault);
        std::cout << fault << ": " << (det ? "detectable" : "not detectable") << ", "
                  << (iso ? "isolable" : "not isolable") << '\n';
    }
    return 0;
}

// dsep ----------------------------------------------------------------------

int run_dsep(const std::string& dag_path, const std::string& x, const std::string& y,
             const std::string& given) {
    const fdi::Dag dag = fdi::load_dag(dag_path);
    std::set<std::string> z;
    std::stringstream ss(given);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) z.insert(item);
    }
    const bool sep = fdi::d_separated(dag, {x}, {y}, z);
    std::cout << x << " and " << y << " given {";
    bool first = true;
    for (const auto& n : z) {
        std::cout << (first ? "" : ", ") << n;
        first = false;
    }
    std::cout << "}: " << (sep ? "d-separated" : "d-connected") << '\n';
    return 0;
}

// assess ---------------------------------------------------------------------

int run_assess(const std::string& pipeline, bool as_json) {
    fdi::PipelineArtifacts artifacts;
    fdi::PipelineKind kind;
    if (pipeline == "mb") {
        kind = fdi::PipelineKind::MB;
        artifacts.fsm = artifacts.thresholds = artifacts.identifiers = true;
    } else if (pipeline == "eb") {
        kind = fdi::PipelineKind::EB;
        artifacts.fsm = artifacts.trained_model = true;
    } else {
        throw fdi::Error(fdi::Errc::ConfigError, "--pipeline must be mb|eb");
    }
    const auto report = fdi::assess(fdi::profile_from_pipeline(kind, artifacts));
    if (as_json) {
        nlohmann::json j;
        j["level"] = fdi::level_name(report.level);
        j["gaps"] = nlohmann::json::array();
        for (auto d : report.gaps) j["gaps"].push_back(fdi::decision_name(d));
        for (const auto& a : report.aspects) j["aspects"][a.name] = a.status;
        std::cout << j.dump(2) << '\n';
    } else {
        std::cout << fdi::render_report(report);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fault detection and isolation workbench for the switched R-R-C circuit"};
    app.require_subcommand(1);

    SimulateArgs sim_args;
    auto* sim_cmd = app.add_subcommand("simulate", "generate a measurement trace CSV");
    sim_args.common.attach(sim_cmd);
    sim_cmd->add_option("--out", sim_args.out, "output trace CSV")->capture_default_str();
    sim_cmd->add_option("--computed", sim_args.computed,
                        "also write the healthy noise-free model curve to this path");
    sim_cmd->add_option("--label", sim_args.label, "label the trace (Healthy|R0Down|CapUp)");
    sim_cmd->add_flag("--append", sim_args.append, "append rows to an existing CSV");
    sim_cmd->add_option("--fault-target", sim_args.fault_target, "none|r0|c");
    sim_cmd->add_option("--fault-factor", sim_args.fault_factor, "fault multiplier");
    sim_cmd->add_option("--fault-onset", sim_args.fault_onset, "fault onset time [s]");
    sim_cmd->add_option("--sigma", sim_args.sigma, "measurement noise sigma [V]");
    sim_cmd->add_option("--duration", sim_args.duration, "trace duration [s]");
    sim_cmd->add_option("--sample-rate", sim_args.sample_rate, "sample rate [Hz]");
    sim_cmd->add_option("--period", sim_args.period, "switch period [s]");
    sim_cmd->add_option("--duty", sim_args.duty, "switch duty cycle (0,1)");
    sim_cmd->add_option("--start-state", sim_args.start_state, "initial switch state 0|1");
    sim_cmd->add_option("--method", sim_args.method, "closed_form|rk4");

    ResidualArgs res_args;
    auto* res_cmd = app.add_subcommand("residuals", "evaluate ARR residuals over a trace");
    res_args.common.attach(res_cmd);
    res_cmd->add_option("--trace", res_args.trace_path, "input trace CSV")->required();
    res_cmd->add_option("--out", res_args.out, "output residual CSV");

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "train the decision-forest classifier");
    train_args.common.attach(train_cmd);
    train_cmd->add_option("--dataset", train_args.dataset, "labeled dataset CSV")->required();
    train_cmd->add_option("--model", train_args.model, "output model file")->capture_default_str();
    train_cmd->add_option("--holdout", train_args.holdout,
                          "hold out this fraction and report its accuracy");

    ClassifyArgs cls_args;
    auto* cls_cmd = app.add_subcommand("classify", "classify traces with a trained model");
    cls_args.common.attach(cls_cmd);
    cls_cmd->add_option("--model", cls_args.model, "model file")->required();
    cls_cmd->add_option("--dataset", cls_args.dataset, "dataset CSV to classify")->required();
    cls_cmd->add_option("--out", cls_args.out, "predictions CSV");

    ImportanceArgs imp_args;
    auto* imp_cmd = app.add_subcommand("importance", "print the experience-based FSM");
    imp_args.common.attach(imp_cmd);
    imp_cmd->add_option("--dataset", imp_args.dataset, "labeled dataset CSV")->required();
    imp_cmd->add_option("--out", imp_args.out, "write the FSM table here as well");

    auto* fsm_cmd = app.add_subcommand("fsm", "fault signature matrix utilities");
    fsm_cmd->require_subcommand(1);
    auto* fsm_mb = fsm_cmd->add_subcommand("mb", "print the built-in model-based FSM");
    std::string fsm_file;
    double fsm_threshold = 0.05;
    auto* fsm_an = fsm_cmd->add_subcommand("analyze", "detectability/isolability of an FSM file");
    fsm_an->add_option("file", fsm_file, "FSM table file")->required();
    fsm_an->add_option("--threshold", fsm_threshold, "binarization threshold for score FSMs")
        ->capture_default_str();

    std::string dsep_dag, dsep_x, dsep_y, dsep_given;
    auto* dsep_cmd = app.add_subcommand("dsep", "d-separation query on a DAG file");
    dsep_cmd->add_option("--dag", dsep_dag, "DAG file (edge list)")->required();
    dsep_cmd->add_option("x", dsep_x, "first variable")->required();
    dsep_cmd->add_option("y", dsep_y, "second variable")->required();
    dsep_cmd->add_option("--given", dsep_given, "conditioning set, comma separated");

    std::string assess_pipeline;
    bool assess_json = false;
    auto* assess_cmd = app.add_subcommand("assess", "maturity report for a pipeline");
    assess_cmd->add_option("--pipeline", assess_pipeline, "mb|eb")->required();
    assess_cmd->add_flag("--json", assess_json, "machine-readable output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // exit 1 on any argv/config parse problem
    }

    try {
        if (sim_cmd->parsed()) return run_simulate(sim_args);
        if (res_cmd->parsed()) return run_residuals(res_args);
        if (train_cmd->parsed()) return run_train(train_args);
        if (cls_cmd->parsed()) return run_classify(cls_args);
        if (imp_cmd->parsed()) return run_importance(imp_args);
        if (fsm_cmd->parsed()) {
            if (fsm_mb->parsed()) return run_fsm_mb();
            if (fsm_an->parsed()) return run_fsm_analyze(fsm_file, fsm_threshold);
        }
        if (dsep_cmd->parsed()) return run_dsep(dsep_dag, dsep_x, dsep_y, dsep_given);
        if (assess_cmd->parsed()) return run_assess(assess_pipeline, assess_json);
    } catch (const fdi::Error& e) {
        std::cerr << "error (" << fdi::errc_name(e.code()) << "): " << e.what() << '\n';
        return fdi::exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
