#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "otdr/geo.hpp"
#include "otdr/rng.hpp"

using namespace otdr;

TEST_CASE("haversine reference values") {
    CHECK(haversine_m({40.0, -95.0}, {40.0, -95.0}) == doctest::Approx(0.0));
    // one degree along the equator: R * pi / 180
    CHECK(haversine_m({0.0, 0.0}, {0.0, 1.0}) ==
          doctest::Approx(111194.926644558737).epsilon(1e-9));

    SplitMix rng(31);
    for (int k = 0; k < 100; ++k) {
        LatLon a{rng.next_uniform(-89.0, 89.0), rng.next_uniform(-179.0, 179.0)};
        LatLon b{rng.next_uniform(-89.0, 89.0), rng.next_uniform(-179.0, 179.0)};
        CHECK(haversine_m(a, b) == haversine_m(b, a));  // exact symmetry
        CHECK(haversine_m(a, b) >= 0.0);
    }

    CHECK_THROWS_AS(haversine_m({91.0, 0.0}, {0.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(haversine_m({0.0, 181.0}, {0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("build_route accumulates slack-scaled chainage") {
    auto r = build_route({{0.0, 0.0}, {0.0, 1.0}}, 1.0);
    REQUIRE(r.vertices.size() == 2);
    CHECK(r.vertices[0].chainage_m == 0.0);
    CHECK(r.vertices[1].chainage_m == doctest::Approx(111194.926644558737).epsilon(1e-9));

    auto slacked = build_route({{0.0, 0.0}, {0.0, 1.0}}, 1.02);
    CHECK(slacked.vertices[1].chainage_m ==
          doctest::Approx(1.02 * r.vertices[1].chainage_m).epsilon(1e-15));

    CHECK_THROWS_AS(build_route({{0.0, 0.0}}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_route({{0.0, 0.0}, {0.0, 0.0}}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_route({{0.0, 0.0}, {0.0, 1.0}}, 0.9), std::invalid_argument);

    CHECK(validate_route(slacked).empty());
}

TEST_CASE("locate_fault interpolates within segments") {
    auto r = build_route({{40.0, -95.0}, {40.1, -95.0}, {40.1, -94.8}}, 1.02);

    SUBCASE("vertex chainages return the vertices exactly") {
        for (const auto& v : r.vertices) {
            LatLon p = locate_fault(r, v.chainage_m);
            CHECK(p.lat_deg == v.lat_deg);
            CHECK(p.lon_deg == v.lon_deg);
        }
    }
    SUBCASE("segment midpoint is the coordinate midpoint") {
        const auto& a = r.vertices[0];
        const auto& b = r.vertices[1];
        LatLon p = locate_fault(r, 0.5 * (a.chainage_m + b.chainage_m));
        CHECK(p.lat_deg == doctest::Approx(0.5 * (a.lat_deg + b.lat_deg)).epsilon(1e-12));
        CHECK(p.lon_deg == doctest::Approx(0.5 * (a.lon_deg + b.lon_deg)).epsilon(1e-12));
    }
    SUBCASE("out-of-range distances are rejected") {
        CHECK_THROWS_AS(locate_fault(r, r.vertices.back().chainage_m + 1.0), std::out_of_range);
        CHECK_THROWS_AS(locate_fault(r, -1.0), std::invalid_argument);
        RoutePolyline empty;
        CHECK_THROWS_AS(locate_fault(empty, 0.0), std::invalid_argument);
    }
}

TEST_CASE("locate-then-project round trip against a grid-scan oracle") {
    auto r = build_route({{40.0, -95.0}, {40.05, -94.97}, {40.11, -94.95}, {40.2, -94.9}}, 1.01);
    const double total = r.vertices.back().chainage_m;

    // oracle: scan a fine chainage grid for the point closest to the query
    auto project_back = [&](const LatLon& q) {
        const double step = total / 20000.0;
        double best_d = 1e300, best_c = 0.0;
        for (double c = 0.0; c <= total; c += step) {
            LatLon p = locate_fault(r, c);
            double dla = p.lat_deg - q.lat_deg;
            double dlo = p.lon_deg - q.lon_deg;
            double d2 = dla * dla + dlo * dlo;
            if (d2 < best_d) {
                best_d = d2;
                best_c = c;
            }
        }
        return best_c;
    };

    SplitMix rng(7);
    for (int k = 0; k < 12; ++k) {
        const double d = rng.next_uniform(0.0, total);
        LatLon p = locate_fault(r, d);
        const double recovered = project_back(p);
        CHECK(std::abs(recovered - d) <= total / 20000.0 + 1e-9);
    }
}

TEST_CASE("locate_fault is continuous and monotone along the polyline") {
    auto r = build_route({{10.0, 10.0}, {10.2, 10.1}, {10.25, 10.4}}, 1.0);
    const double total = r.vertices.back().chainage_m;
    LatLon prev = locate_fault(r, 0.0);
    for (int k = 1; k <= 500; ++k) {
        LatLon cur = locate_fault(r, total * k / 500.0);
        const double jump = std::abs(cur.lat_deg - prev.lat_deg) +
                            std::abs(cur.lon_deg - prev.lon_deg);
        CHECK(jump < 0.01);  // small parameter steps move the point a little
        prev = cur;
    }
}

TEST_CASE("validate_route flags inconsistent chainage") {
    RoutePolyline r;
    r.slack_factor = 1.0;
    r.vertices = {{0.0, 0.0, 0.0}, {0.0, 1.0, 500.0}};  // far below haversine length
    auto v = validate_route(r);
    REQUIRE(!v.empty());
    CHECK(v.front().find("deviates") != std::string::npos);
}
