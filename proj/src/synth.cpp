#include "otdr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "otdr/rng.hpp"

namespace otdr {

namespace {

// Baseline plus cumulative event loss at distance z, spikes and fiber-end
// termination excluded. Steps are Heaviside (loss applies for z >= position);
// bends ramp linearly over max(extent, spacing).
double base_curve(const FiberScenario& s, double z) {
    const AcquisitionConfig& c = s.config;
    double y = c.launch_level_db - c.attenuation_db_per_km * z / 1000.0;
    for (const FiberEvent& e : s.events) {
        if (e.kind == EventKind::FiberEnd) continue;
        if (e.kind == EventKind::Bend) {
            double run = std::max(e.extent_m, c.sample_spacing_m);
            double frac = std::clamp((z - e.position_m) / run, 0.0, 1.0);
            y -= e.loss_db * frac;
        } else if (z >= e.position_m) {
            y -= e.loss_db;
        }
    }
    return y;
}

// Base value just left of an event position: the event's own contribution is
// zero in the left limit, so evaluating the other events at z = pos suffices.
double base_left_of(const FiberScenario& s, const FiberEvent& ev) {
    const AcquisitionConfig& c = s.config;
    double y = c.launch_level_db - c.attenuation_db_per_km * ev.position_m / 1000.0;
    for (const FiberEvent& e : s.events) {
        if (&e == &ev || e.kind == EventKind::FiberEnd) continue;
        if (e.kind == EventKind::Bend) {
            double run = std::max(e.extent_m, c.sample_spacing_m);
            double frac = std::clamp((ev.position_m - e.position_m) / run, 0.0, 1.0);
            y -= e.loss_db * frac;
        } else if (ev.position_m >= e.position_m) {
            y -= e.loss_db;
        }
    }
    return y;
}

void require_valid(const FiberScenario& s) {
    auto violations = validate_scenario(s);
    if (!violations.empty()) {
        std::ostringstream os;
        os << "invalid scenario:";
        for (const auto& v : violations) os << "\n  - " << v;
        throw std::invalid_argument(os.str());
    }
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

void fill_meta(Trace& t, const FiberScenario& s, bool noisy) {
    const AcquisitionConfig& c = s.config;
    t.meta["rng_seed"] = std::to_string(c.rng_seed);
    t.meta["noise_sigma_linear"] = format_double(noisy ? c.noise_sigma_linear : 0.0);
    t.meta["launch_level_db"] = format_double(c.launch_level_db);
    t.meta["attenuation_db_per_km"] = format_double(c.attenuation_db_per_km);
    t.meta["noise_floor_db"] = format_double(c.noise_floor_db);
    t.meta["pulse_width_ns"] = format_double(c.pulse_width_ns);
    t.meta["group_index"] = format_double(c.group_index);
    t.meta["label_class"] = to_string(s.label.cls);
    if (s.label.position_m)
        t.meta["label_position_m"] = format_double(*s.label.position_m);
    std::ostringstream ev;
    ev << s.events.size();
    t.meta["event_count"] = ev.str();
}

}  // namespace

Trace clean_trace(const FiberScenario& s) {
    require_valid(s);
    const AcquisitionConfig& c = s.config;
    const double w = pulse_spatial_width(c);
    const std::size_t n = trace_sample_count(c);

    Trace t;
    t.spacing_m = c.sample_spacing_m;
    t.samples.resize(n);

    for (std::size_t i = 0; i < n; ++i) {
        const double z = static_cast<double>(i) * c.sample_spacing_m;
        double y = base_curve(s, z);

        // Triangular reflectance spikes, one pulse width wide.
        for (const FiberEvent& e : s.events) {
            if (e.reflectance_spike_db <= 0.0) continue;
            if (z >= e.position_m && z <= e.position_m + w) {
                double peak = base_left_of(s, e) +
                              e.reflectance_spike_db * (1.0 - (z - e.position_m) / w);
                y = std::max(y, peak);
            }
        }

        // Total termination beyond a fiber end.
        for (const FiberEvent& e : s.events) {
            if (e.kind == EventKind::FiberEnd && z > e.position_m + w)
                y = c.noise_floor_db;
        }

        t.samples[i] = std::max(y, c.noise_floor_db);
    }

    fill_meta(t, s, /*noisy=*/false);
    return t;
}

Trace noisy_trace(const FiberScenario& s) {
    Trace t = clean_trace(s);
    const AcquisitionConfig& c = s.config;
    if (c.noise_sigma_linear > 0.0) {
        const GaussianStream g(c.rng_seed);
        const double floor_linear = db_to_linear(c.noise_floor_db);
        for (std::size_t i = 0; i < t.samples.size(); ++i) {
            double p = db_to_linear(t.samples[i]) + c.noise_sigma_linear * g.at(i);
            t.samples[i] = linear_to_db(std::max(p, floor_linear));
        }
    }
    fill_meta(t, s, /*noisy=*/true);
    return t;
}

std::array<FiberScenario, 4> reference_scenarios() {
    // Loss magnitudes are the midpoints of the dataset sampler ranges.
    AcquisitionConfig acq;

    FiberScenario normal;
    normal.config = acq;

    FiberScenario splice;
    splice.config = acq;
    splice.events.push_back({EventKind::Splice, 3000.0, 0.55, 0.0, 0.0});
    splice.label = {FaultClass::Splice, 3000.0};

    FiberScenario bend;
    bend.config = acq;
    bend.events.push_back({EventKind::Bend, 6000.0, 1.75, 0.0, 10.5});
    bend.label = {FaultClass::Bend, 6000.0};

    FiberScenario connector;
    connector.config = acq;
    connector.events.push_back({EventKind::Connector, 8000.0, 0.85, 6.0, 0.0});
    connector.label = {FaultClass::Connector, 8000.0};

    return {normal, splice, bend, connector};
}

}  // namespace otdr
