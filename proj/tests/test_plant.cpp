#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "otdr/plant.hpp"
#include "otdr/rng.hpp"

using namespace otdr;

TEST_CASE("db_to_linear on reference points") {
    CHECK(db_to_linear(0.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(db_to_linear(10.0) == doctest::Approx(10.0).epsilon(1e-15));
    // 10^(-0.3), frozen from an arbitrary-precision evaluation
    CHECK(db_to_linear(-3.0) == doctest::Approx(0.501187233627272285).epsilon(1e-14));
}

TEST_CASE("linear_to_db and round trip") {
    CHECK(linear_to_db(1.0) == doctest::Approx(0.0));
    CHECK(linear_to_db(100.0) == doctest::Approx(20.0).epsilon(1e-14));
    CHECK(linear_to_db(0.5011872) == doctest::Approx(-3.0).epsilon(1e-6));
    CHECK_THROWS_AS(linear_to_db(0.0), std::domain_error);
    CHECK_THROWS_AS(linear_to_db(-2.0), std::domain_error);

    // identity within 1e-12 relative over p in [1e-12, 1e12]
    for (int e = -12; e <= 12; ++e) {
        for (double mant : {1.0, 2.718281828, 7.3}) {
            double p = mant * std::pow(10.0, e);
            CHECK(db_to_linear(linear_to_db(p)) == doctest::Approx(p).epsilon(1e-12));
        }
    }
}

TEST_CASE("pulse_spatial_width") {
    AcquisitionConfig c;
    c.pulse_width_ns = 10.0;
    c.group_index = 1.468;
    CHECK(pulse_spatial_width(c) == doctest::Approx(1.02109147820163488).epsilon(1e-12));
    c.pulse_width_ns = 100.0;
    CHECK(pulse_spatial_width(c) == doctest::Approx(10.2109147820163488).epsilon(1e-12));

    // strictly increasing in pulse width, strictly decreasing in group index
    SplitMix rng(77);
    for (int i = 0; i < 200; ++i) {
        AcquisitionConfig a;
        a.pulse_width_ns = rng.next_uniform(1.0, 500.0);
        a.group_index = rng.next_uniform(1.0, 2.0);
        AcquisitionConfig wider = a;
        wider.pulse_width_ns *= 1.0 + rng.next_uniform(0.01, 1.0);
        CHECK(pulse_spatial_width(wider) > pulse_spatial_width(a));
        AcquisitionConfig denser = a;
        denser.group_index = std::min(2.0, a.group_index * (1.0 + rng.next_uniform(0.001, 0.2)));
        if (denser.group_index > a.group_index)
            CHECK(pulse_spatial_width(denser) < pulse_spatial_width(a));
    }
}

TEST_CASE("config invariants are rejected with reasons") {
    FiberScenario s;
    CHECK(validate_scenario(s).empty());

    SUBCASE("zero pulse width") {
        s.config.pulse_width_ns = 0.0;
        auto v = validate_scenario(s);
        REQUIRE(!v.empty());
        CHECK(v.front().find("pulse_width_ns") != std::string::npos);
    }
    SUBCASE("range too small") {
        s.config.range_m = 5.0 * s.config.sample_spacing_m;
        CHECK(!validate_scenario(s).empty());
    }
    SUBCASE("noise floor above launch") {
        s.config.noise_floor_db = s.config.launch_level_db + 1.0;
        CHECK(!validate_scenario(s).empty());
    }
}

TEST_CASE("event ordering and kind invariants") {
    FiberScenario s;

    SUBCASE("unsorted events") {
        s.events.push_back({EventKind::Splice, 3000.0, 0.5, 0.0, 0.0});
        s.events.push_back({EventKind::Splice, 2999.0, 0.5, 0.0, 0.0});
        s.label = {FaultClass::Splice, 3000.0};
        auto v = validate_scenario(s);
        REQUIRE(!v.empty());
        bool found = false;
        for (const auto& msg : v)
            if (msg.find("not sorted") != std::string::npos) found = true;
        CHECK(found);
    }
    SUBCASE("reflective splice") {
        s.events.push_back({EventKind::Splice, 3000.0, 0.5, 1.0, 0.0});
        s.label = {FaultClass::Splice, 3000.0};
        auto v = validate_scenario(s);
        REQUIRE(!v.empty());
        CHECK(v.front().find("non-reflective") != std::string::npos);
    }
    SUBCASE("non-reflective connector") {
        s.events.push_back({EventKind::Connector, 8000.0, 0.5, 0.0, 0.0});
        s.label = {FaultClass::Connector, 8000.0};
        CHECK(!validate_scenario(s).empty());
    }
    SUBCASE("valid single splice") {
        s.events.push_back({EventKind::Splice, 3000.0, 0.5, 0.0, 0.0});
        s.label = {FaultClass::Splice, 3000.0};
        CHECK(validate_scenario(s).empty());
    }
    SUBCASE("events too close") {
        s.events.push_back({EventKind::Splice, 3000.0, 0.5, 0.0, 0.0});
        s.events.push_back({EventKind::Splice, 3000.5, 0.5, 0.0, 0.0});
        s.label = {FaultClass::Splice, 3000.0};
        CHECK(!validate_scenario(s).empty());
    }
    SUBCASE("only fiber end may sit at range") {
        s.events.push_back({EventKind::Splice, 10000.0, 0.5, 0.0, 0.0});
        s.label = {FaultClass::Splice, 5000.0};
        CHECK(!validate_scenario(s).empty());
        s.events.clear();
        s.events.push_back({EventKind::FiberEnd, 10000.0, 0.0, 4.0, 0.0});
        s.label = FaultLabel{};
        CHECK(validate_scenario(s).empty());
    }
    SUBCASE("label position required for faults") {
        s.label = {FaultClass::Bend, std::nullopt};
        CHECK(!validate_scenario(s).empty());
    }
}

TEST_CASE("trace sample count") {
    AcquisitionConfig c;
    CHECK(trace_sample_count(c) == 10001);
    c.sample_spacing_m = 2.0;
    CHECK(trace_sample_count(c) == 5001);
}
