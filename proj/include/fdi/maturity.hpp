#pragma once

#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fdi/errors.hpp"

namespace fdi {

// Decisions of the maintenance control loop, in flow order.
enum class Decision { Detect, Isolate, Identify, Prognose, Recover };

inline const char* decision_name(Decision d) {
    switch (d) {
        case Decision::Detect: return "detect";
        case Decision::Isolate: return "isolate";
        case Decision::Identify: return "identify";
        case Decision::Prognose: return "prognose";
        case Decision::Recover: return "recover";
    }
    return "?";
}

enum class CausalityMode { Associational, ModelBased, None };

inline const char* causality_name(CausalityMode m) {
    switch (m) {
        case CausalityMode::Associational: return "associational";
        case CausalityMode::ModelBased: return "model-based";
        case CausalityMode::None: return "none";
    }
    return "?";
}

// What a pipeline claims to compute, plus how it translates to and
// reasons about the monitored system.
struct CapabilityProfile {
    std::set<Decision> computed_decisions;
    CausalityMode causality_mode = CausalityMode::None;
    std::string translation_notes;
    std::string computability_notes;
};

enum class MaturityLevel { None, Monitoring, Understanding, Predicting, Deciding };

inline const char* level_name(MaturityLevel l) {
    switch (l) {
        case MaturityLevel::None: return "None";
        case MaturityLevel::Monitoring: return "Monitoring";
        case MaturityLevel::Understanding: return "Understanding";
        case MaturityLevel::Predicting: return "Predicting";
        case MaturityLevel::Deciding: return "Deciding";
    }
    return "?";
}

struct AspectStatus {
    std::string name;
    std::string status;
};

struct MaturityReport {
    MaturityLevel level = MaturityLevel::None;
    std::vector<Decision> gaps;       // decisions not computed, in flow order
    std::vector<AspectStatus> aspects;
};

// Maturity tiers require their decisions contiguously from detection
// upward; a partial tier reports the highest fully covered level.
inline MaturityReport assess(const CapabilityProfile& profile) {
    const auto has = [&](Decision d) { return profile.computed_decisions.count(d) > 0; };

    MaturityReport r;
    r.level = MaturityLevel::None;
    if (has(Decision::Detect)) {
        r.level = MaturityLevel::Monitoring;
        if (has(Decision::Isolate) && has(Decision::Identify)) {
            r.level = MaturityLevel::Understanding;
            if (has(Decision::Prognose)) {
                r.level = MaturityLevel::Predicting;
                if (has(Decision::Recover)) r.level = MaturityLevel::Deciding;
            }
        }
    }
    for (Decision d : {Decision::Detect, Decision::Isolate, Decision::Identify, Decision::Prognose,
                       Decision::Recover}) {
        if (!has(d)) r.gaps.push_back(d);
    }

    std::string causality = causality_name(profile.causality_mode);
    switch (profile.causality_mode) {
        case CausalityMode::Associational:
            causality +=
                ": scores relate faults to symptoms without a causal account; verdicts outside the "
                "training regime are unvalidated, applicability at unseen operating regimes is "
                "unknown, and the features carry no fault magnitude";
            break;
        case CausalityMode::ModelBased:
            causality +=
                ": causal direction follows the solving order of the design model; applicability is "
                "assessable without new data (detection needs power exchange after a switch "
                "transition) and residual values scale with fault magnitude";
            break;
        case CausalityMode::None:
            break;
    }
    r.aspects.push_back({"maturity", level_name(r.level)});
    r.aspects.push_back({"translation", profile.translation_notes});
    r.aspects.push_back({"computability", profile.computability_notes});
    r.aspects.push_back({"causality", causality});
    return r;
}

enum class PipelineKind { MB, EB };

struct PipelineArtifacts {
    bool fsm = false;
    bool thresholds = false;     // calibrated residual thresholds (MB)
    bool identifiers = false;    // magnitude estimators (MB)
    bool trained_model = false;  // classifier (EB)
};

inline CapabilityProfile profile_from_pipeline(PipelineKind kind, const PipelineArtifacts& a) {
    if (a.identifiers && !a.thresholds) {
        throw Error(Errc::InvalidProfile, "identifiers require calibrated thresholds");
    }
    CapabilityProfile p;
    if (kind == PipelineKind::MB) {
        p.causality_mode = CausalityMode::ModelBased;
        p.translation_notes =
            "measured voltages map onto design-model variables; faults are parameter drifts";
        p.computability_notes =
            "detection, isolation and magnitude identification are computable from the residuals; "
            "prognosis and recovery remain human decisions";
        if (a.thresholds) p.computed_decisions.insert(Decision::Detect);
        if (a.thresholds && a.fsm) p.computed_decisions.insert(Decision::Isolate);
        if (a.identifiers) p.computed_decisions.insert(Decision::Identify);
    } else {
        p.causality_mode = CausalityMode::Associational;
        p.translation_notes =
            "fault labels come from known experimental interventions; features are the measured "
            "channels plus time since the last switch transition";
        p.computability_notes =
            "detection and isolation are computable within the sampled regime; the features do not "
            "represent fault magnitude";
        if (a.trained_model) p.computed_decisions.insert(Decision::Detect);
        if (a.trained_model && a.fsm) p.computed_decisions.insert(Decision::Isolate);
    }
    return p;
}

// key: value text block, one aspect per line.
inline std::string render_report(const MaturityReport& r) {
    std::ostringstream os;
    os << "level: " << level_name(r.level) << '\n';
    os << "gaps:";
    for (Decision d : r.gaps) os << ' ' << decision_name(d);
    os << '\n';
    for (const auto& a : r.aspects) os << a.name << ": " << a.status << '\n';
    return os.str();
}

}  // namespace fdi
