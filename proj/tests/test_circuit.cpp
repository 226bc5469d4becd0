#include <catch2/catch_amalgamated.hpp>

#include "fdi/circuit.hpp"

using Catch::Approx;
using namespace fdi;

namespace {

Trace square_wave_trace(double duration, double rate, const SwitchSchedule& sch) {
    Trace tr;
    const auto n = static_cast<std::size_t>(duration * rate) + 1;
    for (std::size_t k = 0; k < n; ++k) {
        Sample s;
        s.t = static_cast<double>(k) / rate;
        s.s1 = sch.state_at(s.t);
        tr.samples.push_back(s);
    }
    return tr;
}

}  // namespace

TEST_CASE("nominal parameters match the design model") {
    const auto p = CircuitParams::nominal();
    REQUIRE(p.r0 == 1.0e4);
    REQUIRE(p.r1 == 1.0e4);
    REQUIRE(p.elastance == 1.0e4);
    REQUIRE(p.source_amplitude == 5.0);
    REQUIRE(p.time_constant() == Approx(2.0));
}

TEST_CASE("source voltage follows the pulse") {
    const SwitchSchedule sch{20.0, 0.5, 1};
    const auto p = CircuitParams::nominal();
    REQUIRE(source_voltage(sch, p, 3.0) == 5.0);
    REQUIRE(source_voltage(sch, p, 15.0) == 0.0);
    REQUIRE(source_voltage(sch, p, 20.0) == 5.0);

    SECTION("start state low inverts the phases") {
        const SwitchSchedule low{20.0, 0.5, 0};
        REQUIRE(source_voltage(low, p, 3.0) == 0.0);
        REQUIRE(source_voltage(low, p, 15.0) == 5.0);
    }
}

TEST_CASE("source voltage is periodic") {
    const SwitchSchedule sch{20.0, 0.35, 1};
    const auto p = CircuitParams::nominal();
    for (int k = 0; k < 1000; ++k) {
        const double t = 0.037 * k;
        REQUIRE(source_voltage(sch, p, t) == source_voltage(sch, p, t + sch.period));
    }
}

TEST_CASE("effective parameters apply drifts from onset") {
    const auto nominal = CircuitParams::nominal();

    SECTION("resistance drop halves r0 only") {
        const auto p = effective_params(nominal, FaultSpec::r0_drift(0.5), 1.0);
        REQUIRE(p.r0 == Approx(5.0e3));
        REQUIRE(p.r1 == nominal.r1);
        REQUIRE(p.elastance == nominal.elastance);
        REQUIRE(p.source_amplitude == nominal.source_amplitude);
    }
    SECTION("doubling the capacitance halves the elastance") {
        const auto p = effective_params(nominal, FaultSpec::capacitance_drift(2.0), 1.0);
        REQUIRE(p.elastance == Approx(5.0e3));
        REQUIRE(p.r0 == nominal.r0);
    }
    SECTION("factor one is healthy") {
        const auto p = effective_params(nominal, FaultSpec::r0_drift(1.0), 1.0);
        REQUIRE(p.r0 == nominal.r0);
    }
    SECTION("no change before onset, idempotent after") {
        const auto fault = FaultSpec::r0_drift(0.5, 5.0);
        REQUIRE(effective_params(nominal, fault, 4.999).r0 == nominal.r0);
        const auto a = effective_params(nominal, fault, 5.0);
        const auto b = effective_params(nominal, fault, 123.0);
        REQUIRE(a.r0 == b.r0);
        REQUIRE(a.r0 == Approx(5.0e3));
    }
    SECTION("non-positive factor is rejected") {
        REQUIRE_THROWS_AS(effective_params(nominal, FaultSpec::r0_drift(0.0), 1.0), Error);
    }
}

TEST_CASE("switch transitions are located at the first sample of each state") {
    SECTION("constant switch has no transitions") {
        Trace tr;
        for (int k = 0; k < 100; ++k) tr.samples.push_back({k * 0.1, 0, 0, 0, 1});
        REQUIRE(switch_transitions(tr).empty());
    }
    SECTION("single drop at 10 s") {
        SwitchSchedule sch{20.0, 0.5, 1};
        const auto tr = square_wave_trace(19.9, 10.0, sch);
        const auto trans = switch_transitions(tr);
        REQUIRE(trans.size() == 1);
        REQUIRE(trans[0].t == Approx(10.0));
        REQUIRE(trans[0].new_state == 0);
    }
    SECTION("square wave over 40 s transitions at 10, 20, 30") {
        SwitchSchedule sch{20.0, 0.5, 1};
        const auto tr = square_wave_trace(39.9, 10.0, sch);
        const auto trans = switch_transitions(tr);
        REQUIRE(trans.size() == 3);
        REQUIRE(trans[0].t == Approx(10.0));
        REQUIRE(trans[1].t == Approx(20.0));
        REQUIRE(trans[2].t == Approx(30.0));
        REQUIRE(trans[0].new_state == 0);
        REQUIRE(trans[1].new_state == 1);
        REQUIRE(trans[2].new_state == 0);
    }
    SECTION("empty trace is rejected") {
        REQUIRE_THROWS_AS(switch_transitions(Trace{}), Error);
    }
}

TEST_CASE("trace validation enforces uniform spacing") {
    Trace tr;
    tr.samples.push_back({0.0, 0, 0, 0, 1});
    tr.samples.push_back({0.1, 0, 0, 0, 1});
    tr.samples.push_back({0.3, 0, 0, 0, 1});
    REQUIRE_THROWS_AS(tr.validate(), Error);

    Trace ok;
    for (int k = 0; k < 5; ++k) ok.samples.push_back({k * 0.1, 0, 0, 0, 1});
    REQUIRE_NOTHROW(ok.validate());
    REQUIRE_THROWS_AS(Trace{}.validate(), Error);
}
