#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "fdi/circuit.hpp"
#include "fdi/errors.hpp"
#include "fdi/random.hpp"

namespace fdi {

enum class SimMethod { ClosedForm, RungeKutta4 };

struct SimConfig {
    double duration = 40.0;      // s
    double sample_rate = 10.0;   // Hz
    SimMethod method = SimMethod::ClosedForm;
    double rk_step = 0.01;       // s, RungeKutta4 only

    void validate() const {
        if (!(duration > 0.0) || !(sample_rate > 0.0)) {
            throw Error(Errc::ConfigError, "simulation requires duration > 0 and sample_rate > 0");
        }
        if (!(rk_step > 0.0) || rk_step > 1.0 / sample_rate + 1e-12) {
            throw Error(Errc::ConfigError, "rk_step must be in (0, 1/sample_rate]");
        }
    }
};

// Exact solution of the single storage state over a segment with a
// constant source: dVc/dt = (v_src - Vc) * E / (r0 + r1).
inline double closed_form_segment(double v_c_start, double v_src, const CircuitParams& params,
                                  double dt) {
    const double tau = params.time_constant();
    return v_src + (v_c_start - v_src) * std::exp(-dt / tau);
}

namespace detail {

// Source value governing the open interval ending at t: the left limit,
// so an RK4 stage landing exactly on a switch transition does not pick
// up the next segment's source level.
inline double source_left(const SwitchSchedule& schedule, const CircuitParams& params, double t) {
    return source_voltage(schedule, params, std::nextafter(t, -1.0));
}

inline double rk4_interval(double vc, double t0, double h, int n_sub,
                           const SwitchSchedule& schedule, const CircuitParams& params) {
    const double coeff = params.elastance / (params.r0 + params.r1);
    const double hs = h / n_sub;
    double t = t0;
    for (int s = 0; s < n_sub; ++s) {
        const double u0 = source_voltage(schedule, params, t);
        const double um = source_voltage(schedule, params, t + 0.5 * hs);
        const double u1 = source_left(schedule, params, t + hs);
        const double k1 = coeff * (u0 - vc);
        const double k2 = coeff * (um - (vc + 0.5 * hs * k1));
        const double k3 = coeff * (um - (vc + 0.5 * hs * k2));
        const double k4 = coeff * (u1 - (vc + hs * k3));
        vc += hs / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t = t0 + (s + 1) * hs;
    }
    return vc;
}

}  // namespace detail

// Generate a measurement trace of the circuit under `schedule`, an
// optional parameter drift and optional measurement noise. Samples are
// produced at t = k / sample_rate; the storage state starts discharged.
inline Trace simulate(const CircuitParams& params, const SwitchSchedule& schedule,
                      const std::optional<FaultSpec>& fault, const std::optional<NoiseSpec>& noise,
                      const SimConfig& cfg) {
    params.validate();
    schedule.validate();
    if (fault) fault->validate();
    if (noise) noise->validate();
    cfg.validate();

    const FaultSpec f = fault.value_or(FaultSpec::none());
    const double h = 1.0 / cfg.sample_rate;
    // epsilon guards the floor against products like 0.3 * 10 = 2.999...
    const auto n_samples =
        static_cast<std::size_t>(std::floor(cfg.duration * cfg.sample_rate + 1e-9)) + 1;
    const int n_sub = cfg.method == SimMethod::RungeKutta4
                          ? std::max(1, static_cast<int>(std::llround(h / cfg.rk_step)))
                          : 1;

    Trace trace;
    trace.samples.reserve(n_samples);

    double vc = 0.0;  // storage voltage, discharged at t = 0
    for (std::size_t k = 0; k < n_samples; ++k) {
        const double t = static_cast<double>(k) / cfg.sample_rate;
        const CircuitParams p = effective_params(params, f, t);
        const double u = source_voltage(schedule, p, t);
        const double i = (u - vc) / (p.r0 + p.r1);
        Sample s;
        s.t = t;
        s.v0 = u;
        s.v1 = u - i * p.r0;
        s.v2 = vc;
        s.s1 = schedule.state_at(t);
        trace.samples.push_back(s);

        if (k + 1 < n_samples) {
            if (cfg.method == SimMethod::ClosedForm) {
                vc = closed_form_segment(vc, u, p, h);
            } else {
                vc = detail::rk4_interval(vc, t, h, n_sub, schedule, p);
            }
        }
    }

    if (noise && noise->sigma_volts > 0.0) {
        std::mt19937_64 rng(noise->seed);
        for (auto& s : trace.samples) {
            s.v0 += noise->sigma_volts * gaussian(rng);
            s.v1 += noise->sigma_volts * gaussian(rng);
            s.v2 += noise->sigma_volts * gaussian(rng);
        }
    }

    trace.meta["method"] = cfg.method == SimMethod::ClosedForm ? "closed_form" : "rk4";
    trace.meta["sigma"] = std::to_string(noise ? noise->sigma_volts : 0.0);
    trace.meta["seed"] = std::to_string(noise ? noise->seed : 0);
    if (f.target != FaultTarget::None) {
        trace.meta["fault"] = std::string(f.target == FaultTarget::R0 ? "r0" : "c") + "*" +
                              std::to_string(f.factor) + "@" + std::to_string(f.onset);
    }
    return trace;
}

}  // namespace fdi
