#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "otdr/baseline.hpp"
#include "otdr/classifier.hpp"
#include "otdr/rng.hpp"
#include "otdr/synth.hpp"

using namespace otdr;

TEST_CASE("every sampled scenario validates") {
    SamplerConfig cfg;
    AcquisitionConfig acq;
    for (std::size_t i = 0; i < 10000; ++i) {
        FiberScenario s = sample_scenario(cfg, acq, i);
        auto violations = validate_scenario(s);
        if (!violations.empty()) {
            CAPTURE(i);
            CAPTURE(violations.front());
            REQUIRE(violations.empty());
        }
        if (s.label.cls != FaultClass::Normal) {
            REQUIRE(s.label.position_m.has_value());
            CHECK(*s.label.position_m >= cfg.position_min_m);
            CHECK(*s.label.position_m <= cfg.position_max_m);
        }
    }
}

TEST_CASE("sampling is deterministic and order-independent") {
    SamplerConfig cfg;
    cfg.n_traces = 40;
    AcquisitionConfig acq;

    auto a = sample_dataset(cfg, acq);
    auto b = sample_dataset(cfg, acq);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].second.cls == b[i].second.cls);
        REQUIRE(a[i].first.samples.size() == b[i].first.samples.size());
        for (std::size_t j = 0; j < a[i].first.samples.size(); ++j)
            CHECK(a[i].first.samples[j] == b[i].first.samples[j]);
    }

    // item i alone reproduces the i-th dataset entry
    FiberScenario s7 = sample_scenario(cfg, acq, 7);
    Trace t7 = noisy_trace(s7);
    for (std::size_t j = 0; j < t7.samples.size(); ++j)
        CHECK(t7.samples[j] == a[7].first.samples[j]);
}

TEST_CASE("class counts are reproducible and roughly balanced") {
    SamplerConfig cfg;
    cfg.n_traces = 100;
    AcquisitionConfig acq;
    std::array<int, 4> counts{0, 0, 0, 0};
    for (std::size_t i = 0; i < cfg.n_traces; ++i)
        counts[static_cast<std::size_t>(sample_scenario(cfg, acq, i).label.cls)]++;
    std::array<int, 4> again{0, 0, 0, 0};
    for (std::size_t i = 0; i < cfg.n_traces; ++i)
        again[static_cast<std::size_t>(sample_scenario(cfg, acq, i).label.cls)]++;
    CHECK(counts == again);
    int total = 0;
    for (int c : counts) {
        CHECK(c >= 10);  // uniform mix, n=100
        total += c;
    }
    CHECK(total == 100);
}

TEST_CASE("invalid sampler configs are rejected") {
    SamplerConfig cfg;
    cfg.class_mix = {0.5, 0.5, 0.5, 0.5};
    CHECK_THROWS_AS(validate_sampler_config(cfg), std::invalid_argument);
    cfg = SamplerConfig{};
    cfg.splice_loss_min_db = 2.0;  // min > max
    cfg.splice_loss_max_db = 1.0;
    CHECK_THROWS_AS(validate_sampler_config(cfg), std::invalid_argument);
    cfg = SamplerConfig{};
    cfg.n_traces = 0;
    CHECK_THROWS_AS(validate_sampler_config(cfg), std::invalid_argument);
}

TEST_CASE("augmentation core behaviors") {
    FiberScenario s;
    s.events.push_back({EventKind::Splice, 3000.0, 0.5, 0.0, 0.0});
    s.label = {FaultClass::Splice, 3000.0};
    s.config.noise_sigma_linear = 5.0;
    Trace t = noisy_trace(s);

    SUBCASE("zero-magnitude draws are the identity") {
        auto [at, al] = augment_with(t, s.label, 0.0, 1.0, 0.0, 42);
        REQUIRE(at.samples.size() == t.samples.size());
        for (std::size_t i = 0; i < t.samples.size(); ++i) CHECK(at.samples[i] == t.samples[i]);
        CHECK(*al.position_m == *s.label.position_m);
    }
    SUBCASE("vertical offset moves every sample and keeps the label") {
        auto [at, al] = augment_with(t, s.label, 2.0, 1.0, 0.0, 42);
        for (std::size_t i = 0; i < t.samples.size(); ++i)
            CHECK(at.samples[i] == doctest::Approx(t.samples[i] + 2.0).epsilon(1e-12));
        CHECK(*al.position_m == *s.label.position_m);
    }
    SUBCASE("horizontal shift moves the label with the trace") {
        auto [at, al] = augment_with(t, s.label, 0.0, 1.0, 50.0, 42);
        CHECK(*al.position_m == doctest::Approx(3050.0));
        // leading edge is padded with the first value
        CHECK(at.samples[0] == t.samples[0]);
        CHECK(at.samples[10] == t.samples[0]);
        // interior content is shifted
        CHECK(at.samples[3050] == doctest::Approx(t.samples[3000]).epsilon(1e-9));
    }
    SUBCASE("label clipping at the span edge") {
        FaultLabel near_end{FaultClass::Splice, 9980.0};
        auto [at, al] = augment_with(t, near_end, 0.0, 1.0, 50.0, 42);
        CHECK(*al.position_m <= t.range_m() - t.spacing_m);
    }
    SUBCASE("seeded augment is deterministic") {
        auto [a1, l1] = augment(t, s.label, 777);
        auto [a2, l2] = augment(t, s.label, 777);
        for (std::size_t i = 0; i < a1.samples.size(); ++i)
            CHECK(a1.samples[i] == a2.samples[i]);
        CHECK(*l1.position_m == *l2.position_m);
    }
}

TEST_CASE("shift then noiseless re-detection recovers the shifted position") {
    FiberScenario s;
    s.events.push_back({EventKind::Splice, 3000.0, 0.8, 0.0, 0.0});
    s.label = {FaultClass::Splice, 3000.0};
    Trace t = clean_trace(s);
    for (double shift : {-40.0, 25.0, 50.0}) {
        auto [at, al] = augment_with(t, s.label, 0.0, 1.0, shift, 1);
        Detection d = detect_threshold(at, ThresholdConfig{});
        REQUIRE(d.position_m.has_value());
        CHECK(std::abs(*d.position_m - (3000.0 + shift)) <= 2.0 * t.spacing_m);
        CHECK(*al.position_m == doctest::Approx(3000.0 + shift));
    }
}

TEST_CASE("preprocess properties") {
    SUBCASE("constant trace standardizes to zeros") {
        Trace t;
        t.spacing_m = 1.0;
        t.samples.assign(512, 7.5);
        auto x = preprocess(t, 128);
        REQUIRE(x.size() == 128);
        for (double v : x.data) CHECK(v == 0.0);
    }
    SUBCASE("output length and moments") {
        Trace t = noisy_trace([] {
            FiberScenario s;
            s.config.noise_sigma_linear = 10.0;
            s.config.rng_seed = 5;
            return s;
        }());
        auto x = preprocess(t, 1024);
        REQUIRE(x.size() == 1024);
        double mean = 0.0, var = 0.0;
        for (double v : x.data) mean += v;
        mean /= 1024.0;
        for (double v : x.data) var += (v - mean) * (v - mean);
        var /= 1024.0;
        CHECK(std::abs(mean) < 1e-9);
        CHECK(std::abs(var - 1.0) < 1e-9);
    }
    SUBCASE("a linear ramp stays linear through resampling") {
        Trace t;
        t.spacing_m = 2.0;
        for (int i = 0; i < 701; ++i) t.samples.push_back(12.0 - 0.004 * 2.0 * i);
        auto x = preprocess(t, 257);
        for (std::size_t j = 2; j < x.size(); ++j) {
            double second_diff = x.data[j] - 2.0 * x.data[j - 1] + x.data[j - 2];
            CHECK(std::abs(second_diff) < 1e-9);
        }
    }
    SUBCASE("degenerate traces are rejected") {
        Trace t;
        t.samples = {1.0};
        CHECK_THROWS_AS(preprocess(t, 64), std::invalid_argument);
    }
}

TEST_CASE("cnn construction traces the documented shapes") {
    CnnConfig cfg;
    CnnModel m = build_cnn(cfg);
    // 1024 -> conv9 -> 1016 -> pool4 -> 254 -> conv9 -> 246 -> pool4 -> 61
    //     -> conv5 -> 57 -> pool4 -> 14 cells x 64 channels -> dense 64
    REQUIRE(m.trunk.size() == 11);
    CHECK(m.trunk[9].in_dim == 64 * 14);
    CHECK(m.trunk[9].out_dim == 64);
    CHECK(m.head_class[0].out_dim == 4);
    CHECK(m.head_pos[0].out_dim == 1);
    CHECK(m.head_pos[0].bias[0] == 0.5);

    CnnModel m2 = build_cnn(cfg);
    for (std::size_t li = 0; li < m.trunk.size(); ++li)
        for (std::size_t w = 0; w < m.trunk[li].weights.size(); ++w)
            CHECK(m.trunk[li].weights[w] == m2.trunk[li].weights[w]);

    CnnConfig other = cfg;
    other.init_seed += 1;
    CnnModel m3 = build_cnn(other);
    CHECK(m3.trunk[0].weights[0] != m.trunk[0].weights[0]);
}

TEST_CASE("zeroed heads fall back to the first class by tie-break") {
    CnnConfig cfg;
    CnnModel m = build_cnn(cfg);
    for (auto& l : m.head_class) {
        std::fill(l.weights.begin(), l.weights.end(), 0.0);
        std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
    Trace t = noisy_trace(reference_scenarios()[1]);
    Detection d = infer(m, t);
    CHECK(d.cls == FaultClass::Normal);  // equal logits, lowest index wins
    CHECK(d.confidence == doctest::Approx(0.25));
}

TEST_CASE("infer is pure and clamps position into the span") {
    CnnConfig cfg;
    CnnModel m = build_cnn(cfg);
    Trace t = noisy_trace(reference_scenarios()[3]);
    Detection a = infer(m, t);
    Detection b = infer(m, t);
    CHECK(a.cls == b.cls);
    CHECK(a.confidence == b.confidence);
    if (a.position_m) {
        CHECK(*a.position_m == *b.position_m);
        CHECK(*a.position_m >= 0.0);
        CHECK(*a.position_m <= t.range_m());
    }
    CHECK(a.confidence >= 0.0);
    CHECK(a.confidence <= 1.0);
}

TEST_CASE("activation maps expose the stack") {
    CnnConfig cfg;
    CnnModel m = build_cnn(cfg);
    Trace t = noisy_trace(reference_scenarios()[2]);

    auto input = activation_map(m, t, 0);
    auto pre = preprocess(t, cfg.input_len);
    REQUIRE(input.size() == pre.size());
    for (std::size_t i = 0; i < pre.size(); ++i) CHECK(input.data[i] == pre.data[i]);

    // every post-ReLU tensor is nonnegative
    for (std::size_t li = 0; li < m.trunk.size(); ++li) {
        if (m.trunk[li].kind != nn::LayerKind::ReLU) continue;
        auto act = activation_map(m, t, li + 1);
        for (double v : act.data) CHECK(v >= 0.0);
    }
    CHECK_THROWS_AS(activation_map(m, t, m.trunk.size() + 1), std::out_of_range);
}

TEST_CASE("training overfits a repeated single trace") {
    FiberScenario s;
    s.events.push_back({EventKind::Bend, 6000.0, 2.0, 0.0, 8.0});
    s.label = {FaultClass::Bend, 6000.0};
    s.config.noise_sigma_linear = 10.0;
    s.config.rng_seed = 99;
    Trace t = noisy_trace(s);

    std::vector<std::pair<Trace, FaultLabel>> dataset(50, {t, s.label});
    CnnConfig cfg;
    cfg.epochs = 30;
    cfg.augment = false;
    cfg.threads = 2;
    TrainResult r = train(dataset, cfg);

    REQUIRE(r.log.size() == 30);
    CHECK(r.log.back().train_loss < 0.05);
    // loss decreases monotonically once optimization settles
    for (std::size_t e = 3; e < r.log.size(); ++e)
        CHECK(r.log[e].train_loss < r.log[e - 1].train_loss + 0.02);
    CHECK(r.best_val_accuracy == doctest::Approx(1.0));

    Detection d = infer(r.model, t);
    CHECK(d.cls == FaultClass::Bend);
}

TEST_CASE("training is deterministic, also across thread counts") {
    SamplerConfig scfg;
    scfg.n_traces = 24;
    AcquisitionConfig acq;
    auto dataset = sample_dataset(scfg, acq);

    CnnConfig cfg;
    cfg.epochs = 2;
    cfg.threads = 1;
    TrainResult a = train(dataset, cfg);
    cfg.threads = 4;
    TrainResult b = train(dataset, cfg);

    REQUIRE(a.log.size() == b.log.size());
    for (std::size_t e = 0; e < a.log.size(); ++e) {
        CHECK(a.log[e].train_loss == b.log[e].train_loss);
        CHECK(a.log[e].val_loss == b.log[e].val_loss);
        CHECK(a.log[e].val_accuracy == b.log[e].val_accuracy);
    }
    for (std::size_t li = 0; li < a.model.trunk.size(); ++li)
        for (std::size_t w = 0; w < a.model.trunk[li].weights.size(); ++w)
            CHECK(a.model.trunk[li].weights[w] == b.model.trunk[li].weights[w]);
}

TEST_CASE("validation split is disjoint and near 20 percent") {
    // mirrors the split used by train()
    SamplerConfig scfg;
    scfg.n_traces = 10;
    AcquisitionConfig acq;
    auto dataset = sample_dataset(scfg, acq);
    CnnConfig cfg;
    cfg.epochs = 1;
    cfg.augment = false;
    TrainResult r = train(dataset, cfg);
    CHECK(r.log.size() == 1);

    CHECK_THROWS_AS(train({}, cfg), std::invalid_argument);
}
