#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "fdi/circuit.hpp"
#include "fdi/errors.hpp"
#include "fdi/forest.hpp"
#include "fdi/residuals.hpp"
#include "fdi/simulate.hpp"

namespace fdi {

// Generation settings of the case-study dataset. The regime is chosen
// so that every (class, time-since-transition) cell of the feature
// space is either far beyond the noise floor from the other classes or
// overlaps them visibly: traces stop shortly after the first switch
// transition (the near-steady stretches of the low-pass circuit carry
// no class information), and the sampling grid keeps the decay
// trajectories of different classes from interleaving within noise.
struct DatasetConfig {
    int traces_per_class = 48;
    double trace_duration = 11.2;  // s; rows at 10.4 s and 11.2 s
    double sample_rate = 1.25;     // Hz
    double sigma = 0.02;           // measurement noise, volt
    double r0_factor = 0.5;
    double c_factor = 2.0;
    double holdout = 0.3;
    std::uint64_t seed = 42;

    void validate() const {
        if (traces_per_class < 2) {
            throw Error(Errc::ConfigError, "dataset needs at least 2 traces per class");
        }
        if (!(trace_duration > 0.0) || !(sample_rate > 0.0) || !(sigma >= 0.0) ||
            !(r0_factor > 0.0) || !(c_factor > 0.0)) {
            throw Error(Errc::ConfigError, "dataset durations/rates/factors must be positive");
        }
        if (!(holdout > 0.0) || !(holdout < 1.0)) {
            throw Error(Errc::ConfigError, "holdout fraction must be in (0,1)");
        }
    }
};

// Whole-run configuration, one section per module. Parsed from a
// key = value file; unknown sections or keys are rejected.
struct RunConfig {
    CircuitParams circuit;
    SwitchSchedule schedule;
    FaultSpec fault;
    NoiseSpec noise;
    SimConfig sim;
    Thresholds thresholds;
    ForestConfig forest;
    DatasetConfig dataset;

    void validate() const {
        circuit.validate();
        schedule.validate();
        fault.validate();
        noise.validate();
        sim.validate();
        thresholds.validate();
        forest.validate(feature_columns().size());
        dataset.validate();
    }

    static RunConfig parse(std::istream& is);
    static RunConfig load(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw Error(Errc::IoError, "cannot open config: " + path);
        return parse(is);
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

struct ConfigValue {
    std::string where;  // "section.key"
    std::string raw;

    double as_double() const {
        try {
            std::size_t pos = 0;
            const double v = std::stod(raw, &pos);
            if (pos != raw.size()) throw std::invalid_argument(raw);
            return v;
        } catch (const std::exception&) {
            throw Error(Errc::ConfigError, "bad number for " + where + ": '" + raw + "'");
        }
    }

    long as_int() const {
        try {
            std::size_t pos = 0;
            const long v = std::stol(raw, &pos);
            if (pos != raw.size()) throw std::invalid_argument(raw);
            return v;
        } catch (const std::exception&) {
            throw Error(Errc::ConfigError, "bad integer for " + where + ": '" + raw + "'");
        }
    }

    std::uint64_t as_u64() const {
        try {
            std::size_t pos = 0;
            const auto v = std::stoull(raw, &pos);
            if (pos != raw.size()) throw std::invalid_argument(raw);
            return v;
        } catch (const std::exception&) {
            throw Error(Errc::ConfigError, "bad seed for " + where + ": '" + raw + "'");
        }
    }

    bool as_bool() const {
        if (raw == "true" || raw == "1" || raw == "on") return true;
        if (raw == "false" || raw == "0" || raw == "off") return false;
        throw Error(Errc::ConfigError, "bad boolean for " + where + ": '" + raw + "'");
    }
};

}  // namespace detail

inline RunConfig RunConfig::parse(std::istream& is) {
    RunConfig cfg;
    std::string section;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = detail::trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') {
                throw Error(Errc::ConfigError,
                            "malformed section header on line " + std::to_string(line_no));
            }
            section = detail::trim(line.substr(1, line.size() - 2));
            if (section != "circuit" && section != "schedule" && section != "fault" &&
                section != "noise" && section != "sim" && section != "thresholds" &&
                section != "forest" && section != "dataset") {
                throw Error(Errc::ConfigError, "unknown config section [" + section + "]");
            }
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(Errc::ConfigError, "expected key = value on line " + std::to_string(line_no));
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const detail::ConfigValue v{section + "." + key, detail::trim(line.substr(eq + 1))};
        if (section.empty()) {
            throw Error(Errc::ConfigError, "key '" + key + "' appears before any section");
        }

        if (section == "circuit") {
            if (key == "r0") cfg.circuit.r0 = v.as_double();
            else if (key == "r1") cfg.circuit.r1 = v.as_double();
            else if (key == "elastance") cfg.circuit.elastance = v.as_double();
            else if (key == "source_amplitude") cfg.circuit.source_amplitude = v.as_double();
            else throw Error(Errc::ConfigError, "unknown key " + v.where);
        } else if (section == "schedule") {
            if (key == "period") cfg.schedule.period = v.as_double();
            else if (key == "duty") cfg.schedule.duty = v.as_double();
            else if (key == "start_state") cfg.schedule.start_state = static_cast<int>(v.as_int());
            else throw Error(Errc::ConfigError, "unknown key " + v.where);
        } else if (section == "fault") {
            if (key == "target") {
                if (v.raw == "none") cfg.fault.target = FaultTarget::None;
                else if (v.raw == "r0") cfg.fault.target = FaultTarget::R0;
                else if (v.raw == "c") cfg.fault.target = FaultTarget::Elastance;
                else throw Error(Errc::ConfigError, "fault.target must be none|r0|c");
            } else if (key == "factor") cfg.fault.factor = v.as_double();
            else if (key == "onset") cfg.fault.onset = v.as_double();
            else throw Error(Errc::ConfigError, "unknown key " + v.where);
        } else if (section == "noise") {
            if (key == "sigma") cfg.noise.sigma_volts = v.as_double();
            else if (key == "seed") cfg.noise.seed = v.as_u64();
            else throw Error(Errc::ConfigError, "unknown key " + v.where);
        } else if (section == "sim") {
            if (key == "duration") cfg.sim.duration = v.as_double();
            else if (key == "sample_rate") cfg.sim.sample_rate = v.as_double();
            else if (key == "method") {
                if (v.raw == "closed_form") cfg.sim.method = SimMethod::ClosedForm;
                else if (v.raw == "rk4") cfg.sim.method = SimMethod::RungeKutta4;
                else throw Error(Errc::ConfigError, "sim.method must be closed_form|rk4");
            } else if (key == "rk_step") cfg.sim.rk_step = v.as_double();
            else throw Error(Errc::ConfigError, "unknown key " + v.where);
        } else if (section == "thresholds") {
            if (key == "thr1") cfg.thresholds.thr1 = v.as_double();
            else if (key == "thr2") cfg.thresholds.thr2 = v.as_double();
            else if (key == "debounce") cfg.thresholds.debounce = static_cast<int>(v.as_int());
            else throw Error(Errc::ConfigError, "unknown key " + v.where);
        } else if (section == "forest") {
            if (key == "n_trees") cfg.forest.n_trees = static_cast<int>(v.as_int());
            else if (key == "max_depth") cfg.forest.max_depth = static_cast<int>(v.as_int());
            else if (key == "min_leaf") cfg.forest.min_leaf = static_cast<int>(v.as_int());
            else if (key == "feature_subsample") cfg.forest.feature_subsample = static_cast<int>(v.as_int());
            else if (key == "bootstrap") cfg.forest.bootstrap = v.as_bool();
            else if (key == "seed") cfg.forest.seed = v.as_u64();
            else throw Error(Errc::ConfigError, "unknown key " + v.where);
        } else if (section == "dataset") {
            if (key == "traces_per_class") cfg.dataset.traces_per_class = static_cast<int>(v.as_int());
            else if (key == "trace_duration") cfg.dataset.trace_duration = v.as_double();
            else if (key == "sample_rate") cfg.dataset.sample_rate = v.as_double();
            else if (key == "sigma") cfg.dataset.sigma = v.as_double();
            else if (key == "r0_factor") cfg.dataset.r0_factor = v.as_double();
            else if (key == "c_factor") cfg.dataset.c_factor = v.as_double();
            else if (key == "holdout") cfg.dataset.holdout = v.as_double();
            else if (key == "seed") cfg.dataset.seed = v.as_u64();
            else throw Error(Errc::ConfigError, "unknown key " + v.where);
        }
    }
    cfg.validate();
    return cfg;
}

}  // namespace fdi
