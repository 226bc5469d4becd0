#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fdi/circuit.hpp"
#include "fdi/csv.hpp"
#include "fdi/errors.hpp"
#include "fdi/fsm.hpp"

namespace fdi {

// An analytical redundancy relation is identified structurally by the
// model parameters it contains; its value on data is computed by the
// dedicated residual functions below.
struct ArrDef {
    std::string name;
    std::set<std::string> parameters;
};

// The two relations of the case-study circuit: a current balance over
// the resistive divider and an exponential decay law across the loop.
inline std::vector<ArrDef> case_study_arrs() {
    return {{"ARR_1", {"R0", "R1"}}, {"ARR_2", {"R0", "R1", "C"}}};
}

// field(fault, arr) = 1 iff the drifting parameter appears in the ARR.
inline FaultSignatureMatrix build_mb_fsm(const std::vector<ArrDef>& arrs,
                                         const std::vector<std::string>& faults) {
    std::vector<std::string> rows;
    std::vector<std::string> cols;
    for (const auto& a : arrs) cols.push_back(a.name);
    std::vector<std::vector<double>> fields;
    for (const auto& f : faults) {
        rows.push_back("Drift in " + f);
        std::vector<double> row;
        for (const auto& a : arrs) row.push_back(a.parameters.count(f) ? 1.0 : 0.0);
        fields.push_back(std::move(row));
    }
    return {std::move(rows), std::move(cols), std::move(fields), FsmKind::ModelBased};
}

inline FaultSignatureMatrix case_study_mb_fsm() {
    return build_mb_fsm(case_study_arrs(), {"R0", "C"});
}

// Residual thresholds with a persistence requirement. The defaults are
// sized for the case-study measurement precision (sigma = 0.02 V at
// 10 Hz): thr1 is five healthy standard deviations of the current
// balance; thr2 is chosen so that a decay-law mismatch from a time
// constant doubled by a storage drift still de-activates within a half
// period of the 20 s switching cycle.
struct Thresholds {
    double thr1 = 2.5e-5;  // ampere
    double thr2 = 0.37;    // volt
    int debounce = 3;      // consecutive samples above threshold

    static Thresholds defaults() { return {}; }

    void validate() const {
        if (!(thr1 > 0.0) || !(thr2 > 0.0) || debounce < 1) {
            throw Error(Errc::ConfigError, "thresholds must be positive, debounce >= 1");
        }
    }
};

// Current balance over the divider, evaluated against nominal
// parameters; zero whenever the design model holds.
inline double arr1(const Sample& s, const CircuitParams& nominal) {
    return (s.v0 - s.v1) / nominal.r0 - (s.v1 - s.v2) / nominal.r1;
}

// Anchor for the decay-law residual: the sample at the most recent
// switch transition.
struct Arr2Anchor {
    double t_s = 0.0;
    double v0x = 0.0;
    double v2x = 0.0;
};

// Decay-law residual: measured v0 - v2 against the nominal exponential
// from the last transition.
inline double arr2(const Sample& s, const CircuitParams& nominal, const Arr2Anchor& anchor) {
    if (s.t < anchor.t_s) {
        throw Error(Errc::NotValid, "arr2 evaluated before its anchor");
    }
    const double decay = std::exp(-(s.t - anchor.t_s) / nominal.time_constant());
    return (s.v0 - s.v2) - (anchor.v0x - anchor.v2x) * decay;
}

struct ResidualTrace {
    std::vector<double> t;
    std::vector<double> r1;       // ampere
    std::vector<double> r2;       // volt, 0 where not valid
    std::vector<bool> valid2;     // decay residual defined (anchored and settled)
    std::vector<bool> active1;
    std::vector<bool> active2;

    std::size_t size() const { return t.size(); }
};

// One-sample-at-a-time residual evaluation with explicit carried state:
// the current anchor, the previous switch position and the debounce
// counters.
class ResidualEvaluator {
public:
    ResidualEvaluator(const CircuitParams& nominal, const Thresholds& thr)
        : nominal_(nominal), thr_(thr) {
        nominal_.validate();
        thr_.validate();
    }

    struct Step {
        double r1 = 0.0;
        double r2 = 0.0;
        bool valid2 = false;
        bool active1 = false;
        bool active2 = false;
    };

    Step step(const Sample& s) {
        Step out;
        out.r1 = arr1(s, nominal_);

        bool at_transition = false;
        if (have_prev_ && s.s1 != prev_s1_) {
            anchor_ = Arr2Anchor{s.t, s.v0, s.v2};
            anchored_ = true;
            at_transition = true;  // settling guard: anchor sample not scored
        }
        prev_s1_ = s.s1;
        have_prev_ = true;

        if (anchored_ && !at_transition) {
            out.r2 = arr2(s, nominal_, anchor_);
            out.valid2 = true;
        }

        count1_ = std::fabs(out.r1) > thr_.thr1 ? count1_ + 1 : 0;
        count2_ = out.valid2 && std::fabs(out.r2) > thr_.thr2 ? count2_ + 1 : 0;
        out.active1 = count1_ >= thr_.debounce;
        out.active2 = count2_ >= thr_.debounce;
        return out;
    }

private:
    CircuitParams nominal_;
    Thresholds thr_;
    Arr2Anchor anchor_{};
    bool anchored_ = false;
    int prev_s1_ = 0;
    bool have_prev_ = false;
    int count1_ = 0;
    int count2_ = 0;
};

inline ResidualTrace evaluate_residuals(const Trace& trace, const CircuitParams& nominal,
                                        const Thresholds& thr) {
    if (trace.empty()) throw Error(Errc::EmptyTrace, "evaluate_residuals on empty trace");
    ResidualEvaluator eval(nominal, thr);
    ResidualTrace rt;
    rt.t.reserve(trace.size());
    rt.r1.reserve(trace.size());
    rt.r2.reserve(trace.size());
    rt.valid2.reserve(trace.size());
    rt.active1.reserve(trace.size());
    rt.active2.reserve(trace.size());
    for (const auto& s : trace.samples) {
        const auto st = eval.step(s);
        rt.t.push_back(s.t);
        rt.r1.push_back(st.r1);
        rt.r2.push_back(st.r2);
        rt.valid2.push_back(st.valid2);
        rt.active1.push_back(st.active1);
        rt.active2.push_back(st.active2);
    }
    return rt;
}

// Per-trace activation vector in ARR order, for isolation against the
// model-based FSM.
inline std::vector<int> activation_vector(const ResidualTrace& rt) {
    const bool a1 = std::any_of(rt.active1.begin(), rt.active1.end(), [](bool b) { return b; });
    const bool a2 = std::any_of(rt.active2.begin(), rt.active2.end(), [](bool b) { return b; });
    return {a1 ? 1 : 0, a2 ? 1 : 0};
}

// Threshold calibration: k standard deviations of each residual over
// healthy traces, clamped to a numerical floor.
inline Thresholds calibrate_thresholds(const std::vector<Trace>& healthy_traces,
                                       const CircuitParams& nominal, double k = 5.0) {
    if (!(k > 0.0)) throw Error(Errc::InvalidArgument, "calibration factor k must be > 0");
    constexpr double kFloor = 1e-9;
    std::vector<double> all_r1;
    std::vector<double> all_r2;
    for (const auto& tr : healthy_traces) {
        if (!tr.label || *tr.label != Label::Healthy) {
            throw Error(Errc::InvalidArgument, "calibration traces must be labeled Healthy");
        }
        const auto rt = evaluate_residuals(tr, nominal, Thresholds::defaults());
        for (std::size_t i = 0; i < rt.size(); ++i) {
            all_r1.push_back(rt.r1[i]);
            if (rt.valid2[i]) all_r2.push_back(rt.r2[i]);
        }
    }
    if (all_r1.size() < 100 || all_r2.size() < 100) {
        throw Error(Errc::InsufficientCalibration,
                    "calibration needs at least 100 healthy residual samples per residual");
    }
    const auto stddev = [](const std::vector<double>& v) {
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        return std::sqrt(ss / static_cast<double>(v.size()));
    };
    Thresholds out;
    out.thr1 = std::max(k * stddev(all_r1), kFloor);
    out.thr2 = std::max(k * stddev(all_r2), kFloor);
    out.debounce = 3;
    return out;
}

// Value of R0 that zeroes the current balance, median over the active
// window; samples with a near-zero divider drop are skipped.
inline double identify_r0(const Trace& trace, const ResidualTrace& residuals,
                          const CircuitParams& nominal) {
    if (trace.size() != residuals.size()) {
        throw Error(Errc::ShapeError, "trace and residual lengths differ");
    }
    constexpr double kGuard = 1e-3;  // volt
    std::vector<double> estimates;
    bool any_active = false;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        if (!residuals.active1[i]) continue;
        any_active = true;
        const auto& s = trace.samples[i];
        if (std::fabs(s.v1 - s.v2) < kGuard) continue;
        estimates.push_back((s.v0 - s.v1) * nominal.r1 / (s.v1 - s.v2));
    }
    if (!any_active) throw Error(Errc::NoActiveWindow, "no active current-balance window");
    if (estimates.empty()) throw Error(Errc::DegenerateWindow, "all active samples below divider guard");
    std::nth_element(estimates.begin(), estimates.begin() + estimates.size() / 2, estimates.end());
    const double upper = estimates[estimates.size() / 2];
    if (estimates.size() % 2 == 1) return upper;
    const double lower = *std::max_element(estimates.begin(), estimates.begin() + estimates.size() / 2);
    return 0.5 * (lower + upper);
}

// Decay time constant from a log-linear least squares fit of v0 - v2
// over [t_start, t_end]; the window must begin at a switch transition
// and contain no further transition.
inline double identify_time_constant(const Trace& trace, const CircuitParams& nominal,
                                     double t_start, double t_end) {
    (void)nominal;
    if (!(t_end > t_start)) throw Error(Errc::InvalidWindow, "window end must exceed its start");
    const auto transitions = switch_transitions(trace);
    constexpr double kTimeTol = 1e-9;
    bool starts_at_transition = false;
    for (const auto& tr : transitions) {
        if (std::fabs(tr.t - t_start) <= kTimeTol) starts_at_transition = true;
        if (tr.t > t_start + kTimeTol && tr.t <= t_end + kTimeTol) {
            throw Error(Errc::InvalidWindow, "window contains another switch transition");
        }
    }
    if (!starts_at_transition) {
        throw Error(Errc::InvalidWindow, "window must start at a switch transition");
    }

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t n = 0;
    for (const auto& s : trace.samples) {
        if (s.t < t_start - kTimeTol || s.t > t_end + kTimeTol) continue;
        const double gap = s.v0 - s.v2;
        if (!(gap > 0.0)) {
            throw Error(Errc::LogDomainError, "v0 - v2 is not strictly positive in the fit window");
        }
        const double y = std::log(gap);
        sx += s.t;
        sy += y;
        sxx += s.t * s.t;
        sxy += s.t * y;
        ++n;
    }
    if (n < 3) throw Error(Errc::InvalidWindow, "fit window needs at least 3 samples");
    const double denom = static_cast<double>(n) * sxx - sx * sx;
    const double slope = (static_cast<double>(n) * sxy - sx * sy) / denom;
    if (!(slope < 0.0)) throw Error(Errc::InvalidWindow, "v0 - v2 is not decaying in the fit window");
    return -1.0 / slope;
}

// Residual CSV: t,r1,r2,valid2,active1,active2 with 9 significant digits.
inline void write_residual_csv(std::ostream& os, const ResidualTrace& rt) {
    os << "t,r1,r2,valid2,active1,active2\n";
    for (std::size_t i = 0; i < rt.size(); ++i) {
        os << format_g9(rt.t[i]) << ',' << format_g9(rt.r1[i]) << ',' << format_g9(rt.r2[i]) << ','
           << (rt.valid2[i] ? 1 : 0) << ',' << (rt.active1[i] ? 1 : 0) << ','
           << (rt.active2[i] ? 1 : 0) << '\n';
    }
}

inline void write_residual_csv(const std::string& path, const ResidualTrace& rt) {
    std::ofstream os(path);
    if (!os) throw Error(Errc::IoError, "cannot open for writing: " + path);
    write_residual_csv(os, rt);
}

}  // namespace fdi
