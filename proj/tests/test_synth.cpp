#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "otdr/plant.hpp"
#include "otdr/rng.hpp"
#include "otdr/synth.hpp"

using namespace otdr;

namespace {

FiberScenario healthy() {
    FiberScenario s;  // defaults: 10 km, 0.35 dB/km, B0 = 30 dB, 1 m spacing
    return s;
}

FiberScenario single_splice(double pos, double loss) {
    FiberScenario s = healthy();
    s.events.push_back({EventKind::Splice, pos, loss, 0.0, 0.0});
    s.label = {FaultClass::Splice, pos};
    return s;
}

}  // namespace

TEST_CASE("healthy clean trace follows the attenuation line exactly") {
    Trace t = clean_trace(healthy());
    REQUIRE(t.samples.size() == 10001);
    CHECK(t.samples[0] == doctest::Approx(30.0).epsilon(1e-15));
    CHECK(t.samples[2000] == doctest::Approx(29.3).epsilon(1e-12));
    CHECK(t.samples[10000] == doctest::Approx(26.5).epsilon(1e-12));

    // inter-event slope equals -alpha within 1e-9 at every sample pair
    for (std::size_t i = 1; i < t.samples.size(); ++i) {
        double slope_db_per_km = (t.samples[i] - t.samples[i - 1]) / t.spacing_m * 1000.0;
        CHECK(std::abs(slope_db_per_km + 0.35) < 1e-9);
    }
}

TEST_CASE("splice produces an exact step") {
    Trace t = clean_trace(single_splice(3000.0, 0.5));
    const double drop = t.samples[2999] - t.samples[3001];
    CHECK(drop == doctest::Approx(0.5 + 0.35 * 2.0 / 1000.0).epsilon(1e-12));
    // step lands on the event sample
    CHECK(t.samples[2999] - t.samples[3000] ==
          doctest::Approx(0.5 + 0.35 * 1.0 / 1000.0).epsilon(1e-9));
}

TEST_CASE("bend ramps linearly over its extent") {
    FiberScenario s = healthy();
    s.events.push_back({EventKind::Bend, 6000.0, 2.0, 0.0, 5.0});
    s.label = {FaultClass::Bend, 6000.0};
    Trace t = clean_trace(s);

    const auto base_at = [](std::size_t i) { return 30.0 - 0.35 * static_cast<double>(i) / 1000.0; };
    CHECK(t.samples[6000] == doctest::Approx(base_at(6000)).epsilon(1e-12));
    CHECK(t.samples[6001] == doctest::Approx(base_at(6001) - 2.0 * 0.2).epsilon(1e-12));
    CHECK(t.samples[6003] == doctest::Approx(base_at(6003) - 2.0 * 0.6).epsilon(1e-12));
    CHECK(t.samples[6005] == doctest::Approx(base_at(6005) - 2.0).epsilon(1e-12));
    CHECK(t.samples[6100] == doctest::Approx(base_at(6100) - 2.0).epsilon(1e-12));
}

TEST_CASE("connector spike peaks at base plus reflectance") {
    FiberScenario s = healthy();
    s.events.push_back({EventKind::Connector, 8000.0, 0.5, 5.0, 0.0});
    s.label = {FaultClass::Connector, 8000.0};
    Trace t = clean_trace(s);

    const double w = pulse_spatial_width(s.config);
    const double base_left = 30.0 - 0.35 * 8000.0 / 1000.0;
    double peak = -1e9;
    for (std::size_t i = 8000; i * t.spacing_m <= 8000.0 + w; ++i)
        peak = std::max(peak, t.samples[i]);
    // peak sample sits on the event itself, one sample of triangular decay
    CHECK(peak == doctest::Approx(base_left + 5.0).epsilon(1e-12));
    // beyond the spike the step loss shows
    CHECK(t.samples[8002] == doctest::Approx(30.0 - 0.35 * 8002.0 / 1000.0 - 0.5).epsilon(1e-12));
}

TEST_CASE("fiber end terminates the trace at the noise floor") {
    FiberScenario s = healthy();
    s.events.push_back({EventKind::FiberEnd, 9000.0, 0.0, 4.0, 0.0});
    Trace t = clean_trace(s);
    CHECK(t.samples[9000] == doctest::Approx(30.0 - 0.35 * 9.0 + 4.0).epsilon(1e-12));
    for (std::size_t i = 9002; i < t.samples.size(); ++i)
        CHECK(t.samples[i] == doctest::Approx(s.config.noise_floor_db));
}

TEST_CASE("cumulative loss is non-decreasing and trace non-increasing outside spikes") {
    FiberScenario s = healthy();
    s.events.push_back({EventKind::Splice, 2000.0, 0.3, 0.0, 0.0});
    s.events.push_back({EventKind::Bend, 5000.0, 1.5, 0.0, 12.0});
    s.events.push_back({EventKind::Connector, 8000.0, 0.7, 6.0, 0.0});
    s.label = {FaultClass::Splice, 2000.0};  // multi-event plant, label informational
    Trace t = clean_trace(s);

    const double w = pulse_spatial_width(s.config);
    for (std::size_t i = 1; i < t.samples.size(); ++i) {
        const double z = i * t.spacing_m;
        const bool in_spike = z >= 8000.0 && z <= 8000.0 + w + t.spacing_m;
        if (!in_spike) CHECK(t.samples[i] <= t.samples[i - 1] + 1e-12);
    }

    // total applied step loss matches the event sum away from the spike
    const double expected = 30.0 - 0.35 * 9500.0 / 1000.0 - (0.3 + 1.5 + 0.7);
    CHECK(t.samples[9500] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("noisy trace with zero sigma equals clean trace bitwise") {
    FiberScenario s = single_splice(3000.0, 0.5);
    s.config.noise_sigma_linear = 0.0;
    Trace clean = clean_trace(s);
    Trace noisy = noisy_trace(s);
    REQUIRE(clean.samples.size() == noisy.samples.size());
    for (std::size_t i = 0; i < clean.samples.size(); ++i)
        CHECK(clean.samples[i] == noisy.samples[i]);
}

TEST_CASE("noise is a pure function of the seed") {
    FiberScenario s = single_splice(3000.0, 0.5);
    s.config.noise_sigma_linear = 10.0;
    s.config.rng_seed = 1234567;
    Trace a = noisy_trace(s);
    Trace b = noisy_trace(s);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) CHECK(a.samples[i] == b.samples[i]);
    CHECK(a.meta.at("rng_seed") == "1234567");

    s.config.rng_seed = 7654321;
    Trace c = noisy_trace(s);
    std::size_t differing = 0;
    for (std::size_t i = 0; i < a.samples.size(); ++i)
        if (a.samples[i] != c.samples[i]) ++differing;
    CHECK(differing > 9000);
}

TEST_CASE("fixed linear sigma inflates dB noise with distance") {
    // Monte Carlo over seeds: mean |deviation| over the last km must exceed
    // the first km, because the signal decays against a constant sigma.
    FiberScenario s = healthy();
    s.config.noise_sigma_linear = 1e-4 * db_to_linear(30.0);
    Trace clean = clean_trace(s);

    std::size_t wins = 0;
    const int n_seeds = 120;
    for (int k = 0; k < n_seeds; ++k) {
        s.config.rng_seed = 1000 + static_cast<std::uint64_t>(k);
        Trace noisy = noisy_trace(s);
        double first = 0.0, last = 0.0;
        for (std::size_t i = 0; i <= 1000; ++i)
            first += std::abs(noisy.samples[i] - clean.samples[i]);
        for (std::size_t i = 9000; i <= 10000; ++i)
            last += std::abs(noisy.samples[i] - clean.samples[i]);
        if (last > first) ++wins;
    }
    CHECK(wins == n_seeds);
}

TEST_CASE("reference scenarios match the archetypes") {
    auto refs = reference_scenarios();
    REQUIRE(refs.size() == 4);
    CHECK(refs[0].label.cls == FaultClass::Normal);
    CHECK(refs[1].label.cls == FaultClass::Splice);
    CHECK(refs[1].label.position_m == doctest::Approx(3000.0));
    CHECK(refs[2].label.cls == FaultClass::Bend);
    CHECK(refs[2].label.position_m == doctest::Approx(6000.0));
    CHECK(refs[3].label.cls == FaultClass::Connector);
    CHECK(refs[3].label.position_m == doctest::Approx(8000.0));

    bool has_spike = false;
    for (const auto& e : refs[3].events)
        if (e.reflectance_spike_db > 0.0) has_spike = true;
    CHECK(has_spike);

    for (const auto& r : refs) CHECK(validate_scenario(r).empty());
}

TEST_CASE("invalid scenario is rejected by the synthesizer") {
    FiberScenario s = healthy();
    s.events.push_back({EventKind::Splice, 3000.0, 0.5, 2.0, 0.0});  // reflective splice
    s.label = {FaultClass::Splice, 3000.0};
    CHECK_THROWS_AS(clean_trace(s), std::invalid_argument);
    CHECK_THROWS_AS(noisy_trace(s), std::invalid_argument);
}

TEST_CASE("all samples clamp at the noise floor") {
    FiberScenario s = healthy();
    s.config.launch_level_db = 2.0;
    s.config.noise_floor_db = 0.0;  // 10 km at 0.35 dB/km crosses the floor
    Trace t = clean_trace(s);
    for (double v : t.samples) CHECK(v >= s.config.noise_floor_db);
    CHECK(t.samples.back() == doctest::Approx(0.0));
}
