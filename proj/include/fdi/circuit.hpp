#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fdi/errors.hpp"

namespace fdi {

// Physical parameters of the series R-R-C loop. The storage element is
// carried as elastance E = 1/C so the charge law reads u_C = E * q and
// the loop time constant is tau = (r0 + r1) / elastance.
struct CircuitParams {
    double r0 = 1.0e4;                // ohm
    double r1 = 1.0e4;                // ohm
    double elastance = 1.0e4;         // 1/farad
    double source_amplitude = 5.0;    // volt

    static CircuitParams nominal() { return {}; }

    double time_constant() const { return (r0 + r1) / elastance; }

    void validate() const {
        if (!(r0 > 0.0) || !(r1 > 0.0) || !(elastance > 0.0) || !(source_amplitude >= 0.0)) {
            throw Error(Errc::ConfigError, "circuit parameters must be positive (amplitude >= 0)");
        }
    }
};

// Pulse schedule driving the switch: high for duty*period, then low,
// repeating from start_state at t = 0.
struct SwitchSchedule {
    double period = 20.0;   // s
    double duty = 0.5;      // fraction of the period spent in start_state
    int start_state = 1;    // 0 or 1

    void validate() const {
        if (!(period > 0.0) || !(duty > 0.0) || !(duty < 1.0)) {
            throw Error(Errc::ConfigError, "switch schedule requires period > 0 and duty in (0,1)");
        }
        if (start_state != 0 && start_state != 1) {
            throw Error(Errc::ConfigError, "switch start_state must be 0 or 1");
        }
    }

    // Switch position at time t, right-continuous at transitions.
    int state_at(double t) const {
        double phase = std::fmod(t, period);
        if (phase < 0.0) phase += period;
        const int first = start_state;
        return phase < duty * period ? first : 1 - first;
    }
};

enum class FaultTarget { None, R0, Elastance };

// A parameter drift: from `onset` on, the target parameter is scaled.
// `factor` is expressed on the physically named quantity, i.e. for the
// storage element it multiplies the capacitance, so the elastance is
// divided by it.
struct FaultSpec {
    FaultTarget target = FaultTarget::None;
    double factor = 1.0;
    double onset = 0.0;  // s

    static FaultSpec none() { return {}; }
    static FaultSpec r0_drift(double factor, double onset = 0.0) {
        return {FaultTarget::R0, factor, onset};
    }
    static FaultSpec capacitance_drift(double factor, double onset = 0.0) {
        return {FaultTarget::Elastance, factor, onset};
    }

    void validate() const {
        if (!(factor > 0.0)) throw Error(Errc::ConfigError, "fault factor must be > 0");
        if (!(onset >= 0.0)) throw Error(Errc::ConfigError, "fault onset must be >= 0");
    }
};

// Additive i.i.d. Gaussian measurement noise on the voltage channels.
// sigma = 0 reproduces the deterministic model exactly.
struct NoiseSpec {
    double sigma_volts = 0.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(sigma_volts >= 0.0)) throw Error(Errc::ConfigError, "noise sigma must be >= 0");
    }
};

enum class Label { Healthy, R0Down, CapUp };

inline const char* label_name(Label l) {
    switch (l) {
        case Label::Healthy: return "Healthy";
        case Label::R0Down: return "R0Down";
        case Label::CapUp: return "CapUp";
    }
    return "?";
}

inline std::optional<Label> label_from_name(const std::string& s) {
    if (s == "Healthy") return Label::Healthy;
    if (s == "R0Down") return Label::R0Down;
    if (s == "CapUp") return Label::CapUp;
    return std::nullopt;
}

struct Sample {
    double t = 0.0;   // s
    double v0 = 0.0;  // volt, source side
    double v1 = 0.0;  // volt, between the resistances
    double v2 = 0.0;  // volt, across the storage element
    int s1 = 0;       // switch position
};

// A time-indexed measurement history with uniform sample spacing.
struct Trace {
    std::vector<Sample> samples;
    std::optional<Label> label;
    std::map<std::string, std::string> meta;  // generation settings; not serialized

    bool empty() const { return samples.empty(); }
    std::size_t size() const { return samples.size(); }

    void validate() const {
        if (samples.empty()) throw Error(Errc::EmptyTrace, "trace has no samples");
        if (samples.size() >= 2) {
            const double dt = samples[1].t - samples[0].t;
            for (std::size_t i = 1; i < samples.size(); ++i) {
                const double step = samples[i].t - samples[i - 1].t;
                if (!(step > 0.0) || std::fabs(step - dt) > 1e-9) {
                    throw Error(Errc::ConfigError,
                                "trace sample spacing is not uniform at index " + std::to_string(i));
                }
            }
        }
    }
};

// Source voltage of the modulated source: amplitude when the pulse is
// high, zero otherwise.
inline double source_voltage(const SwitchSchedule& schedule, const CircuitParams& params, double t) {
    return schedule.state_at(t) == 1 ? params.source_amplitude : 0.0;
}

// Parameters in effect at time t under a drift fault.
inline CircuitParams effective_params(const CircuitParams& nominal, const FaultSpec& fault, double t) {
    fault.validate();
    CircuitParams p = nominal;
    if (fault.target == FaultTarget::None || t < fault.onset) return p;
    switch (fault.target) {
        case FaultTarget::R0:
            p.r0 = nominal.r0 * fault.factor;
            break;
        case FaultTarget::Elastance:
            // factor applies to the capacitance, elastance is its inverse
            p.elastance = nominal.elastance / fault.factor;
            break;
        case FaultTarget::None:
            break;
    }
    return p;
}

struct SwitchTransition {
    double t;       // timestamp of the first sample at the new state
    int new_state;  // 0 or 1
};

// Every index where the measured switch position changes value.
inline std::vector<SwitchTransition> switch_transitions(const Trace& trace) {
    if (trace.empty()) throw Error(Errc::EmptyTrace, "switch_transitions on empty trace");
    std::vector<SwitchTransition> out;
    for (std::size_t i = 1; i < trace.samples.size(); ++i) {
        if (trace.samples[i].s1 != trace.samples[i - 1].s1) {
            out.push_back({trace.samples[i].t, trace.samples[i].s1});
        }
    }
    return out;
}

}  // namespace fdi
