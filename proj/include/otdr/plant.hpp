#pragma once

// Domain types shared by the whole workbench: acquisition parameters, fiber
// events, scenarios, traces, labels and detections. All types are immutable
// value objects once constructed; all operations here are pure.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace otdr {

enum class EventKind { Splice, Bend, Connector, FiberEnd };
enum class FaultClass { Normal = 0, Splice = 1, Bend = 2, Connector = 3 };

constexpr int kNumClasses = 4;

const char* to_string(EventKind k);
const char* to_string(FaultClass c);
std::optional<EventKind> event_kind_from_string(const std::string& s);
std::optional<FaultClass> fault_class_from_string(const std::string& s);

// Instrument and fiber parameters governing trace synthesis.
struct AcquisitionConfig {
    double wavelength_nm = 1550.0;        // informational
    double attenuation_db_per_km = 0.35;  // one-way displayed slope
    double launch_level_db = 30.0;        // trace value at z=0 before noise
    double pulse_width_ns = 10.0;
    double group_index = 1.468;
    double sample_spacing_m = 1.0;
    double range_m = 10000.0;
    double noise_sigma_linear = 12.0;     // stddev of additive linear-power noise
    double noise_floor_db = -10.0;        // receiver clamp level
    std::uint64_t rng_seed = 0;
};

// One discrete loss/reflectance event along the fiber.
struct FiberEvent {
    EventKind kind = EventKind::Splice;
    double position_m = 0.0;
    double loss_db = 0.0;                 // step loss
    double reflectance_spike_db = 0.0;    // peak height above local backscatter
    double extent_m = 0.0;                // spatial spread of the loss transition
};

// Ground-truth (class, position) pair. position_m present iff class != Normal.
struct FaultLabel {
    FaultClass cls = FaultClass::Normal;
    std::optional<double> position_m;
};

// The fiber plant description: span parameters plus ordered events.
struct FiberScenario {
    AcquisitionConfig config;
    std::vector<FiberEvent> events;       // sorted by position_m
    FaultLabel label;
};

// Uniformly sampled backscatter curve in dB versus distance.
struct Trace {
    std::vector<double> samples;          // power in dB
    double spacing_m = 1.0;
    std::map<std::string, std::string> meta;

    double range_m() const {
        return samples.empty() ? 0.0 : spacing_m * static_cast<double>(samples.size() - 1);
    }
};

// Predicted (class, position) pair with auxiliary estimates.
struct Detection {
    FaultClass cls = FaultClass::Normal;
    std::optional<double> position_m;
    double loss_db_est = 0.0;
    double confidence = 0.0;
};

// dB <-> linear power, 0 dB reference = 1.0 linear.
double db_to_linear(double x_db);
double linear_to_db(double p);  // throws std::domain_error for p <= 0

// Physical extent of the probe pulse in the fiber: c*T / (2*n_g).
double pulse_spatial_width(const AcquisitionConfig& config);

// Returns every violated invariant with a human-readable reason; empty
// result means the scenario is valid.
std::vector<std::string> validate_scenario(const FiberScenario& s);

// Number of samples a synthesized trace has: floor(range/spacing) + 1.
std::size_t trace_sample_count(const AcquisitionConfig& config);

}  // namespace otdr
