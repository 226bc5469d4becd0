#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fdi/circuit.hpp"
#include "fdi/config.hpp"
#include "fdi/forest.hpp"
#include "fdi/fsm.hpp"
#include "fdi/random.hpp"
#include "fdi/residuals.hpp"
#include "fdi/simulate.hpp"

namespace fdi {

// Labeled traces of the case-study treatments: healthy, reduced R0 and
// increased capacitance.
inline std::vector<Trace> make_case_study_traces(const CircuitParams& circuit,
                                                 const SwitchSchedule& schedule,
                                                 const DatasetConfig& ds, std::uint64_t seed) {
    ds.validate();
    SimConfig sim;
    sim.duration = ds.trace_duration;
    sim.sample_rate = ds.sample_rate;

    const std::vector<std::pair<Label, FaultSpec>> treatments = {
        {Label::Healthy, FaultSpec::none()},
        {Label::R0Down, FaultSpec::r0_drift(ds.r0_factor)},
        {Label::CapUp, FaultSpec::capacitance_drift(ds.c_factor)},
    };

    std::vector<Trace> traces;
    for (std::size_t c = 0; c < treatments.size(); ++c) {
        for (int i = 0; i < ds.traces_per_class; ++i) {
            NoiseSpec noise{ds.sigma, derive_seed(seed, c * 1000003ULL + static_cast<std::uint64_t>(i))};
            Trace tr = simulate(circuit, schedule, treatments[c].second, noise, sim);
            tr.label = treatments[c].first;
            traces.push_back(std::move(tr));
        }
    }
    return traces;
}

struct MbVerdict {
    bool fault_detected = false;
    std::vector<int> activation;  // per ARR
    IsolationResult isolation;
    std::optional<Label> label;   // Healthy / isolated fault; nullopt on unknown signature
};

// Model-based per-trace verdict: residual activation vector matched
// against the case-study FSM.
inline MbVerdict mb_verdict(const Trace& trace, const CircuitParams& nominal, const Thresholds& thr) {
    MbVerdict v;
    const auto rt = evaluate_residuals(trace, nominal, thr);
    v.activation = activation_vector(rt);
    const auto fsm = case_study_mb_fsm();
    v.isolation = isolate(fsm, v.activation);
    v.fault_detected = v.isolation.fault_detected;
    if (!v.fault_detected) {
        v.label = Label::Healthy;
    } else if (v.isolation.matches.size() == 1) {
        if (v.isolation.matches[0] == "Drift in R0") v.label = Label::R0Down;
        if (v.isolation.matches[0] == "Drift in C") v.label = Label::CapUp;
    }
    return v;
}

// Experience-based per-trace verdict: majority vote over the per-sample
// class predictions (ties go to the lowest class index).
inline std::string eb_majority_verdict(const Forest& forest, const Trace& trace) {
    std::vector<std::size_t> votes(forest.classes.size(), 0);
    for (const auto& row : trace_feature_rows(trace)) {
        ++votes[static_cast<std::size_t>(predict(forest, row).cls)];
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < votes.size(); ++c) {
        if (votes[c] > votes[best]) best = c;
    }
    return forest.classes[best];
}

// Majority verdict over rows sampled at the classifier's training
// cadence: after each switch transition, the samples at
// T = 0, cadence, ..., window (matched to the trace grid) are scored.
// A classifier is only consulted inside the feature regime it was
// trained on; the rest of the trace is ignored.
inline std::string eb_windowed_verdict(const Forest& forest, const Trace& trace, double cadence,
                                       double window) {
    if (!(cadence > 0.0) || !(window >= 0.0)) {
        throw Error(Errc::InvalidArgument, "cadence must be > 0 and window >= 0");
    }
    const auto transitions = switch_transitions(trace);
    if (transitions.empty()) {
        throw Error(Errc::NoTransition, "trace has no switch transition; T is undefined");
    }
    std::vector<std::size_t> votes(forest.classes.size(), 0);
    std::size_t next_tr = 0;
    double last_tr = transitions[0].t;
    for (const auto& s : trace.samples) {
        if (s.t < transitions[0].t) continue;
        while (next_tr < transitions.size() && transitions[next_tr].t <= s.t) {
            last_tr = transitions[next_tr].t;
            ++next_tr;
        }
        const double t_rel = s.t - last_tr;
        if (t_rel > window + 1e-9) continue;
        const double steps = t_rel / cadence;
        if (std::fabs(steps - std::round(steps)) > 1e-6) continue;  // off the training grid
        const std::vector<double> row = {s.v0, s.v1, s.v2, t_rel, static_cast<double>(s.s1)};
        ++votes[static_cast<std::size_t>(predict(forest, row).cls)];
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < votes.size(); ++c) {
        if (votes[c] > votes[best]) best = c;
    }
    return forest.classes[best];
}

}  // namespace fdi
