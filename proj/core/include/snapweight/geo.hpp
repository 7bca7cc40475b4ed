#pragma once

#include <Eigen/Core>

namespace snapweight {

namespace wgs84 {
inline constexpr double kSemiMajorAxis = 6378137.0;
inline constexpr double kFlattening = 1.0 / 298.257223563;
inline constexpr double kSemiMinorAxis = kSemiMajorAxis * (1.0 - kFlattening);
inline constexpr double kEccentricitySq = kFlattening * (2.0 - kFlattening);
}  // namespace wgs84

/// Earth-centered Earth-fixed position in meters.
struct EcefPosition {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Eigen::Vector3d vec() const { return {x, y, z}; }
    static EcefPosition from(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }
    bool operator==(const EcefPosition&) const = default;
};

/// Latitude/longitude in radians, height in meters above the WGS-84 ellipsoid.
struct GeodeticPosition {
    double latitude = 0.0;
    double longitude = 0.0;
    double height = 0.0;
};

struct EnuVector {
    double east = 0.0;
    double north = 0.0;
    double up = 0.0;

    double norm() const;
    Eigen::Vector3d vec() const { return {east, north, up}; }
};

struct LookAngles {
    double elevation = 0.0;  ///< radians, [-pi/2, pi/2]
    double azimuth = 0.0;    ///< radians clockwise from north, [0, 2pi)
};

EcefPosition geodetic_to_ecef(const GeodeticPosition& g);

/// Iterative latitude refinement; converges to machine precision for heights
/// from below the surface up to GNSS orbit altitudes. Throws NearGeocenter
/// for |p| <= 1e5 m.
GeodeticPosition ecef_to_geodetic(const EcefPosition& p);

/// Rotation matrix taking ECEF difference vectors into the ENU frame at ref.
Eigen::Matrix3d ecef_to_enu_rotation(const GeodeticPosition& ref);

EnuVector ecef_to_enu(const EcefPosition& p, const GeodeticPosition& ref);
EcefPosition enu_to_ecef(const EnuVector& enu, const GeodeticPosition& ref);

/// Throws ZeroRange when the two positions coincide.
LookAngles elevation_azimuth(const EcefPosition& sat, const GeodeticPosition& rx);

}  // namespace snapweight
