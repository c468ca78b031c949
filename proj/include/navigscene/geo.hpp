#pragma once

#include <cmath>
#include <string>

#include "navigscene/errors.hpp"

namespace navigscene::geo {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kDegPerRad = 180.0 / kPi;
inline constexpr double kRadPerDeg = kPi / 180.0;

// cos(lat) below this is treated as "at the pole": the longitude offset
// divides by cos(lat) and blows up.
inline constexpr double kPoleEpsilon = 1e-9;

inline double normalize_longitude(double lon) {
    if (lon >= -180.0 && lon < 180.0) return lon;  // keep canonical values bit-exact
    lon = std::fmod(lon + 180.0, 360.0);
    if (lon < 0.0) lon += 360.0;
    return lon - 180.0;
}

// Decimal-degree coordinate. Latitude in [-90, 90]; longitude is wrapped
// into [-180, 180) on construction.
struct GeoCoordinate {
    double lat = 0.0;
    double lon = 0.0;

    GeoCoordinate() = default;
    GeoCoordinate(double lat_deg, double lon_deg) : lat(lat_deg), lon(lon_deg) {
        if (!std::isfinite(lat) || !std::isfinite(lon))
            throw NonFiniteError("coordinate components must be finite");
        if (lat < -90.0 || lat > 90.0)
            throw ValidationError("latitude " + std::to_string(lat) + " outside [-90, 90]");
        lon = normalize_longitude(lon);
    }
};

// Local offset in meters: dx eastward, dy northward, dz upward.
struct TranslationVector {
    double dx = 0.0;
    double dy = 0.0;
    double dz = 0.0;

    TranslationVector() = default;
    TranslationVector(double east_m, double north_m, double up_m = 0.0)
        : dx(east_m), dy(north_m), dz(up_m) {
        if (!std::isfinite(dx) || !std::isfinite(dy) || !std::isfinite(dz))
            throw NonFiniteError("translation components must be finite");
    }

    TranslationVector negated() const { return {-dx, -dy, -dz}; }
};

// Spherical earth. 6,378,137 m is the conventional equatorial radius.
struct EarthModel {
    double radius_m = 6378137.0;

    EarthModel() = default;
    explicit EarthModel(double r) : radius_m(r) {
        if (!(radius_m > 0.0)) throw ValidationError("earth radius must be > 0");
    }
};

// Shift an origin coordinate by a local east/north translation:
//
//   lat' = lat + (180/pi) * dy / R
//   lon' = lon + (180/pi) * dx / (R * cos(lat * pi/180))
//
// dz never contributes: vertical motion does not change horizontal position.
// The result is wrapped back into valid ranges (longitude into [-180, 180),
// latitude clamped at the poles, where the planar approximation has already
// broken down).
inline GeoCoordinate offset_coordinate(const GeoCoordinate& origin, const TranslationVector& t,
                                       const EarthModel& earth = EarthModel{}) {
    const double cos_lat = std::cos(kRadPerDeg * origin.lat);
    if (cos_lat < kPoleEpsilon)
        throw PoleProximityError("origin latitude " + std::to_string(origin.lat) +
                                 " is too close to a pole");

    double lat = origin.lat + kDegPerRad * t.dy / earth.radius_m;
    double lon = origin.lon + kDegPerRad * t.dx / (earth.radius_m * cos_lat);
    if (!std::isfinite(lat) || !std::isfinite(lon))
        throw NonFiniteError("offset produced a non-finite coordinate");

    if (lat > 90.0) lat = 90.0;
    if (lat < -90.0) lat = -90.0;
    return {lat, lon};
}

}  // namespace navigscene::geo
