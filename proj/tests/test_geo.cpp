#include <cmath>
#include <limits>

#include <catch2/catch_amalgamated.hpp>

#include "navigscene/geo.hpp"
#include "navigscene/rng.hpp"

using Catch::Matchers::WithinAbs;
namespace geo = navigscene::geo;

TEST_CASE("one degree of arc northward raises latitude by exactly one degree") {
    const double dy = geo::kPi * 6378137.0 / 180.0;
    const geo::GeoCoordinate out =
        geo::offset_coordinate(geo::GeoCoordinate(0.0, 0.0), geo::TranslationVector(0.0, dy));
    REQUIRE_THAT(out.lat, WithinAbs(1.0, 1e-9));
    REQUIRE(out.lon == 0.0);
}

TEST_CASE("the textbook meters-per-degree northward offset lands on one degree") {
    const geo::GeoCoordinate out = geo::offset_coordinate(geo::GeoCoordinate(0.0, 0.0),
                                                          geo::TranslationVector(0.0, 111319.49079327358));
    REQUIRE_THAT(out.lat, WithinAbs(1.0, 1e-9));
}

TEST_CASE("eastward offset scales with the inverse cosine of latitude") {
    const geo::GeoCoordinate out = geo::offset_coordinate(geo::GeoCoordinate(60.0, 10.0),
                                                          geo::TranslationVector(1000.0, 0.0));
    REQUIRE_THAT(out.lon, WithinAbs(10.01796630568239, 1e-11));
    REQUIRE(out.lat == 60.0);
}

TEST_CASE("vertical translation never moves the coordinate") {
    const geo::GeoCoordinate flat = geo::offset_coordinate(geo::GeoCoordinate(45.0, -120.0),
                                                           geo::TranslationVector(300.0, -200.0, 0.0));
    const geo::GeoCoordinate lifted = geo::offset_coordinate(
        geo::GeoCoordinate(45.0, -120.0), geo::TranslationVector(300.0, -200.0, 123456.0));
    REQUIRE(flat.lat == lifted.lat);
    REQUIRE(flat.lon == lifted.lon);
}

TEST_CASE("offset then inverse offset returns to the origin") {
    navigscene::Rng rng(20240817);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const geo::GeoCoordinate origin(rng.next_range(-80.0, 80.0), rng.next_range(-180.0, 180.0));
        const geo::TranslationVector t(rng.next_range(-100.0, 100.0), rng.next_range(-100.0, 100.0));
        const geo::GeoCoordinate there = geo::offset_coordinate(origin, t);
        const geo::GeoCoordinate back = geo::offset_coordinate(there, t.negated());
        worst = std::max(worst, std::abs(back.lat - origin.lat));
        worst = std::max(worst,
                         std::abs(geo::normalize_longitude(back.lon - origin.lon)));
    }
    REQUIRE(worst < 1e-6);
}

TEST_CASE("longitude wraps across the antimeridian") {
    // 0.2 degrees of longitude at the equator
    const double dx = 0.2 * geo::kPi * 6378137.0 / 180.0;
    const geo::GeoCoordinate out =
        geo::offset_coordinate(geo::GeoCoordinate(0.0, 179.9), geo::TranslationVector(dx, 0.0));
    REQUIRE_THAT(out.lon, WithinAbs(-179.9, 1e-9));
}

TEST_CASE("normalize_longitude maps into the canonical half-open range") {
    REQUIRE(geo::normalize_longitude(180.0) == -180.0);
    REQUIRE(geo::normalize_longitude(540.0) == -180.0);
    REQUIRE(geo::normalize_longitude(-180.0) == -180.0);
    REQUIRE_THAT(geo::normalize_longitude((359.0)), WithinAbs(-1.0, 1e-12));
    REQUIRE(geo::normalize_longitude(179.999) == 179.999);
    REQUIRE(geo::normalize_longitude(0.0) == 0.0);
}

TEST_CASE("latitude saturates at the pole instead of overshooting") {
    const geo::GeoCoordinate out = geo::offset_coordinate(geo::GeoCoordinate(89.0, 0.0),
                                                          geo::TranslationVector(0.0, 500000.0));
    REQUIRE(out.lat == 90.0);
}

TEST_CASE("offsets too close to a pole are rejected") {
    REQUIRE_THROWS_AS(geo::offset_coordinate(geo::GeoCoordinate(90.0, 0.0),
                                             geo::TranslationVector(1.0, 0.0)),
                      navigscene::PoleProximityError);
    REQUIRE_THROWS_AS(geo::offset_coordinate(geo::GeoCoordinate(-90.0, 10.0),
                                             geo::TranslationVector(5.0, 5.0)),
                      navigscene::PoleProximityError);
}

TEST_CASE("non-finite and out-of-range inputs are rejected") {
    REQUIRE_THROWS_AS(geo::GeoCoordinate(std::nan(""), 0.0), navigscene::NonFiniteError);
    REQUIRE_THROWS_AS(geo::GeoCoordinate(0.0, std::numeric_limits<double>::infinity()),
                      navigscene::NonFiniteError);
    REQUIRE_THROWS_AS(geo::GeoCoordinate(91.0, 0.0), navigscene::ValidationError);
    REQUIRE_THROWS_AS(geo::TranslationVector(std::nan(""), 0.0), navigscene::NonFiniteError);
    REQUIRE_THROWS_AS(geo::EarthModel(0.0), navigscene::ValidationError);
    REQUIRE_THROWS_AS(geo::EarthModel(-1.0), navigscene::ValidationError);
}

TEST_CASE("coordinate construction wraps longitude") {
    REQUIRE(geo::GeoCoordinate(0.0, 180.0).lon == -180.0);
    REQUIRE(geo::GeoCoordinate(0.0, 360.0).lon == 0.0);
}

TEST_CASE("a smaller planet bends more per meter") {
    const geo::GeoCoordinate small = geo::offset_coordinate(
        geo::GeoCoordinate(0.0, 0.0), geo::TranslationVector(0.0, 1000.0), geo::EarthModel(1e6));
    const geo::GeoCoordinate big = geo::offset_coordinate(
        geo::GeoCoordinate(0.0, 0.0), geo::TranslationVector(0.0, 1000.0), geo::EarthModel(1e7));
    REQUIRE(small.lat > big.lat);
    REQUIRE_THAT(small.lat, WithinAbs(navigscene::geo::kDegPerRad * 1000.0 / 1e6, 1e-12));
}
