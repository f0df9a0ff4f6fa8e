#include "otdr/geo.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace otdr {

namespace {
constexpr double kEarthRadiusM = 6371000.0;
constexpr double kPi = 3.14159265358979323846;

double to_rad(double deg) { return deg * kPi / 180.0; }

void check_coord(const LatLon& p) {
    if (!(p.lat_deg >= -90.0 && p.lat_deg <= 90.0))
        throw std::invalid_argument("latitude outside [-90, 90]");
    if (!(p.lon_deg >= -180.0 && p.lon_deg <= 180.0))
        throw std::invalid_argument("longitude outside [-180, 180]");
}
}  // namespace

double haversine_m(const LatLon& a, const LatLon& b) {
    check_coord(a);
    check_coord(b);
    const double dlat = to_rad(b.lat_deg - a.lat_deg);
    const double dlon = to_rad(b.lon_deg - a.lon_deg);
    const double slat = std::sin(dlat / 2.0);
    const double slon = std::sin(dlon / 2.0);
    // cosines multiply first so the expression is exactly symmetric in a, b
    double h = slat * slat + (slon * slon) * (std::cos(to_rad(a.lat_deg)) * std::cos(to_rad(b.lat_deg)));
    h = std::min(1.0, std::max(0.0, h));
    return kEarthRadiusM * 2.0 * std::atan2(std::sqrt(h), std::sqrt(1.0 - h));
}

RoutePolyline build_route(const std::vector<LatLon>& waypoints, double slack_factor) {
    if (waypoints.size() < 2)
        throw std::invalid_argument("build_route: at least two waypoints required");
    if (!(slack_factor >= 1.0))
        throw std::invalid_argument("build_route: slack_factor must be >= 1");

    RoutePolyline route;
    route.slack_factor = slack_factor;
    route.vertices.reserve(waypoints.size());
    double chainage = 0.0;
    for (std::size_t i = 0; i < waypoints.size(); ++i) {
        check_coord(waypoints[i]);
        if (i > 0) {
            const double seg = haversine_m(waypoints[i - 1], waypoints[i]);
            if (seg <= 0.0)
                throw std::invalid_argument("build_route: duplicate consecutive waypoints");
            chainage += slack_factor * seg;
        }
        route.vertices.push_back({waypoints[i].lat_deg, waypoints[i].lon_deg, chainage});
    }
    return route;
}

std::vector<std::string> validate_route(const RoutePolyline& route) {
    std::vector<std::string> violations;
    if (route.vertices.size() < 2) {
        violations.push_back("route needs at least two vertices");
        return violations;
    }
    if (!(route.slack_factor >= 1.0)) violations.push_back("slack_factor must be >= 1");
    if (route.vertices.front().chainage_m != 0.0)
        violations.push_back("first chainage must be 0");

    for (std::size_t i = 1; i < route.vertices.size(); ++i) {
        const auto& a = route.vertices[i - 1];
        const auto& b = route.vertices[i];
        const double dc = b.chainage_m - a.chainage_m;
        if (!(dc > 0.0)) {
            std::ostringstream os;
            os << "chainage not strictly increasing at vertex " << i;
            violations.push_back(os.str());
            continue;
        }
        const double expected =
            route.slack_factor * haversine_m({a.lat_deg, a.lon_deg}, {b.lat_deg, b.lon_deg});
        if (expected > 0.0 && std::abs(dc - expected) > 0.25 * expected) {
            std::ostringstream os;
            os << "segment " << i << " chainage " << dc << " m deviates more than 25% from "
               << expected << " m";
            violations.push_back(os.str());
        }
    }
    return violations;
}

LatLon locate_fault(const RoutePolyline& route, double fiber_distance_m) {
    if (route.vertices.size() < 2) throw std::invalid_argument("locate_fault: empty route");
    if (fiber_distance_m < 0.0)
        throw std::invalid_argument("locate_fault: negative fiber distance");
    if (fiber_distance_m > route.vertices.back().chainage_m)
        throw std::out_of_range("locate_fault: fault beyond route end");

    // Find the containing segment; vertices hit exactly return that vertex.
    for (std::size_t i = 1; i < route.vertices.size(); ++i) {
        const auto& a = route.vertices[i - 1];
        const auto& b = route.vertices[i];
        if (fiber_distance_m <= b.chainage_m) {
            const double span = b.chainage_m - a.chainage_m;
            const double f = span > 0.0 ? (fiber_distance_m - a.chainage_m) / span : 0.0;
            return {a.lat_deg + f * (b.lat_deg - a.lat_deg),
                    a.lon_deg + f * (b.lon_deg - a.lon_deg)};
        }
    }
    const auto& last = route.vertices.back();
    return {last.lat_deg, last.lon_deg};
}

}  // namespace otdr
