#pragma once

// Chainage-to-coordinate mapping along a surveyed fiber route.

#include <string>
#include <vector>

namespace otdr {

struct LatLon {
    double lat_deg = 0.0;
    double lon_deg = 0.0;
};

struct RouteVertex {
    double lat_deg = 0.0;
    double lon_deg = 0.0;
    double chainage_m = 0.0;  // cumulative fiber distance from the launch point
};

struct RoutePolyline {
    std::vector<RouteVertex> vertices;  // chainage strictly increasing from 0
    double slack_factor = 1.02;         // fiber length per unit route length
};

// Great-circle distance in meters, spherical earth R = 6371 km.
// Throws std::invalid_argument on out-of-range coordinates.
double haversine_m(const LatLon& a, const LatLon& b);

// Builds a polyline from raw waypoints: chainage accumulates
// slack_factor * haversine per segment. Throws on fewer than two waypoints,
// duplicate consecutive waypoints or slack_factor < 1.
RoutePolyline build_route(const std::vector<LatLon>& waypoints, double slack_factor = 1.02);

// Validates the polyline invariants (chainage from 0, strictly increasing,
// consistent with segment lengths within 25%); returns violations.
std::vector<std::string> validate_route(const RoutePolyline& route);

// Linear interpolation of lat/lon by chainage fraction within the containing
// segment. Throws std::out_of_range when the distance exceeds the route end
// or std::invalid_argument for an empty route / negative distance.
LatLon locate_fault(const RoutePolyline& route, double fiber_distance_m);

}  // namespace otdr
