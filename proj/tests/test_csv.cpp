#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "fdi/csv.hpp"
#include "fdi/simulate.hpp"

using namespace fdi;

TEST_CASE("trace CSV text is stable under parse and rewrite") {
    const auto noisy = [] {
        Trace t = simulate(CircuitParams::nominal(), SwitchSchedule{}, FaultSpec::r0_drift(0.5),
                           NoiseSpec{0.02, 7}, SimConfig{});
        t.label = Label::R0Down;
        return t;
    }();

    std::ostringstream first;
    write_trace_csv(first, {noisy});
    std::istringstream in(first.str());
    const auto parsed = read_traces_csv(in);
    REQUIRE(parsed.size() == 1);
    REQUIRE(parsed[0].label == Label::R0Down);
    REQUIRE(parsed[0].size() == noisy.size());

    std::ostringstream second;
    write_trace_csv(second, parsed);
    REQUIRE(first.str() == second.str());
}

TEST_CASE("concatenated traces split where time restarts") {
    Trace a = simulate(CircuitParams::nominal(), SwitchSchedule{}, std::nullopt, std::nullopt,
                       SimConfig{14.0, 10.0, SimMethod::ClosedForm, 0.01});
    Trace b = a;
    a.label = Label::Healthy;
    b.label = Label::CapUp;
    std::ostringstream os;
    write_trace_csv(os, {a, b});
    std::istringstream in(os.str());
    const auto parsed = read_traces_csv(in);
    REQUIRE(parsed.size() == 2);
    REQUIRE(parsed[0].label == Label::Healthy);
    REQUIRE(parsed[1].label == Label::CapUp);
    REQUIRE(parsed[0].size() == a.size());
}

TEST_CASE("malformed CSV input is rejected") {
    SECTION("bad header") {
        std::istringstream in("time,v0\n");
        REQUIRE_THROWS_AS(read_traces_csv(in), Error);
    }
    SECTION("wrong field count") {
        std::istringstream in("t,v0,v1,v2,s1\n0.0,1,2\n");
        REQUIRE_THROWS_AS(read_traces_csv(in), Error);
    }
    SECTION("bad switch state") {
        std::istringstream in("t,v0,v1,v2,s1\n0.0,1,2,3,2\n");
        REQUIRE_THROWS_AS(read_traces_csv(in), Error);
    }
    SECTION("unknown label") {
        std::istringstream in("t,v0,v1,v2,s1,label\n0.0,1,2,3,1,Broken\n");
        REQUIRE_THROWS_AS(read_traces_csv(in), Error);
    }
    SECTION("no rows") {
        std::istringstream in("t,v0,v1,v2,s1\n");
        REQUIRE_THROWS_AS(read_traces_csv(in), Error);
    }
    SECTION("non-numeric field") {
        std::istringstream in("t,v0,v1,v2,s1\n0.0,x,2,3,1\n");
        REQUIRE_THROWS_AS(read_traces_csv(in), Error);
    }
}
