#include "otdr/plant.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace otdr {

namespace {
constexpr double kSpeedOfLight = 299792458.0;  // m/s
}

const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::Splice:    return "Splice";
        case EventKind::Bend:      return "Bend";
        case EventKind::Connector: return "Connector";
        case EventKind::FiberEnd:  return "FiberEnd";
    }
    return "?";
}

const char* to_string(FaultClass c) {
    switch (c) {
        case FaultClass::Normal:    return "Normal";
        case FaultClass::Splice:    return "Splice";
        case FaultClass::Bend:      return "Bend";
        case FaultClass::Connector: return "Connector";
    }
    return "?";
}

std::optional<EventKind> event_kind_from_string(const std::string& s) {
    if (s == "Splice") return EventKind::Splice;
    if (s == "Bend") return EventKind::Bend;
    if (s == "Connector") return EventKind::Connector;
    if (s == "FiberEnd") return EventKind::FiberEnd;
    return std::nullopt;
}

std::optional<FaultClass> fault_class_from_string(const std::string& s) {
    if (s == "Normal") return FaultClass::Normal;
    if (s == "Splice") return FaultClass::Splice;
    if (s == "Bend") return FaultClass::Bend;
    if (s == "Connector") return FaultClass::Connector;
    return std::nullopt;
}

double db_to_linear(double x_db) {
    return std::pow(10.0, x_db / 10.0);
}

double linear_to_db(double p) {
    if (!(p > 0.0))
        throw std::domain_error("linear_to_db: nonpositive power");
    return 10.0 * std::log10(p);
}

double pulse_spatial_width(const AcquisitionConfig& config) {
    return kSpeedOfLight * config.pulse_width_ns * 1e-9 / (2.0 * config.group_index);
}

std::size_t trace_sample_count(const AcquisitionConfig& config) {
    return static_cast<std::size_t>(std::floor(config.range_m / config.sample_spacing_m)) + 1;
}

namespace {

void check_config(const AcquisitionConfig& c, std::vector<std::string>& out) {
    auto fail = [&out](const std::string& msg) { out.push_back("config: " + msg); };
    if (!(c.sample_spacing_m > 0.0)) fail("sample_spacing_m must be > 0");
    if (!(c.range_m >= 10.0 * c.sample_spacing_m)) fail("range_m must be >= 10 * sample_spacing_m");
    if (!(c.attenuation_db_per_km > 0.0)) fail("attenuation_db_per_km must be > 0");
    if (!(c.pulse_width_ns > 0.0)) fail("pulse_width_ns must be > 0");
    if (!(c.group_index >= 1.0 && c.group_index <= 2.0)) fail("group_index must be in [1, 2]");
    if (!(c.noise_floor_db < c.launch_level_db)) fail("noise_floor_db must be below launch_level_db");
    if (!(c.noise_sigma_linear >= 0.0)) fail("noise_sigma_linear must be >= 0");
    if (!(c.wavelength_nm > 0.0)) fail("wavelength_nm must be > 0");
}

void check_event(const FiberEvent& e, std::size_t idx, const AcquisitionConfig& c,
                 std::vector<std::string>& out) {
    auto fail = [&out, idx, &e](const std::string& msg) {
        std::ostringstream os;
        os << "event " << idx << " (" << to_string(e.kind) << " @ " << e.position_m << " m): " << msg;
        out.push_back(os.str());
    };
    if (!(e.position_m >= 0.0 && e.position_m <= c.range_m))
        fail("position_m outside [0, range_m]");
    if (e.kind != EventKind::FiberEnd && !(e.position_m < c.range_m))
        fail("only FiberEnd may sit at range_m");
    if (!(e.loss_db >= 0.0)) fail("loss_db must be >= 0");
    if (!(e.reflectance_spike_db >= 0.0)) fail("reflectance_spike_db must be >= 0");
    if (!(e.extent_m >= 0.0)) fail("extent_m must be >= 0");

    switch (e.kind) {
        case EventKind::Splice:
            if (e.reflectance_spike_db != 0.0) fail("splice must be non-reflective");
            if (e.extent_m != 0.0) fail("splice must have zero extent");
            break;
        case EventKind::Bend:
            if (e.reflectance_spike_db != 0.0) fail("bend must be non-reflective");
            break;
        case EventKind::Connector:
            if (!(e.reflectance_spike_db > 0.0)) fail("connector must be reflective");
            if (e.extent_m != 0.0) fail("connector must have zero extent");
            break;
        case EventKind::FiberEnd:
            if (!(e.reflectance_spike_db > 0.0)) fail("fiber end must be reflective");
            break;
    }
}

}  // namespace

std::vector<std::string> validate_scenario(const FiberScenario& s) {
    std::vector<std::string> violations;
    check_config(s.config, violations);

    for (std::size_t i = 0; i < s.events.size(); ++i)
        check_event(s.events[i], i, s.config, violations);

    const double min_sep = 2.0 * pulse_spatial_width(s.config);
    for (std::size_t i = 1; i < s.events.size(); ++i) {
        if (!(s.events[i].position_m > s.events[i - 1].position_m)) {
            violations.push_back("events not sorted strictly by position_m");
        } else if (s.events[i].position_m - s.events[i - 1].position_m < min_sep) {
            std::ostringstream os;
            os << "events " << (i - 1) << " and " << i << " closer than 2 * pulse width ("
               << min_sep << " m)";
            violations.push_back(os.str());
        }
    }

    if (s.label.cls == FaultClass::Normal) {
        if (s.label.position_m.has_value())
            violations.push_back("label: Normal must not carry a position");
    } else {
        if (!s.label.position_m.has_value()) {
            violations.push_back("label: faulty class requires a position");
        } else if (!(*s.label.position_m > 0.0 && *s.label.position_m < s.config.range_m)) {
            violations.push_back("label: position_m must lie in (0, range_m)");
        }
    }
    return violations;
}

}  // namespace otdr
