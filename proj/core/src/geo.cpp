#include "snapweight/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "snapweight/errors.hpp"

namespace snapweight {

namespace {

double prime_vertical_radius(double sin_lat) {
    return wgs84::kSemiMajorAxis / std::sqrt(1.0 - wgs84::kEccentricitySq * sin_lat * sin_lat);
}

}  // namespace

double EnuVector::norm() const { return std::sqrt(east * east + north * north + up * up); }

EcefPosition geodetic_to_ecef(const GeodeticPosition& g) {
    const double sin_lat = std::sin(g.latitude);
    const double cos_lat = std::cos(g.latitude);
    const double n = prime_vertical_radius(sin_lat);
    return {(n + g.height) * cos_lat * std::cos(g.longitude),
            (n + g.height) * cos_lat * std::sin(g.longitude),
            (n * (1.0 - wgs84::kEccentricitySq) + g.height) * sin_lat};
}

GeodeticPosition ecef_to_geodetic(const EcefPosition& p) {
    const double r = std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
    if (!(r > 1e5)) throw NearGeocenter();

    const double e2 = wgs84::kEccentricitySq;
    const double rho = std::hypot(p.x, p.y);
    double lon = std::atan2(p.y, p.x);
    if (lon <= -std::numbers::pi) lon = std::numbers::pi;

    // Fixed-point iteration on latitude. The height expression
    // h = rho cos(lat) + z sin(lat) - a sqrt(1 - e2 sin^2 lat) stays well
    // conditioned at the poles, unlike rho / cos(lat) - N.
    double lat = std::atan2(p.z, rho * (1.0 - e2));
    double h = 0.0;
    for (int i = 0; i < 30; ++i) {
        const double s = std::sin(lat);
        const double n = prime_vertical_radius(s);
        h = rho * std::cos(lat) + p.z * s - wgs84::kSemiMajorAxis * std::sqrt(1.0 - e2 * s * s);
        const double next = std::atan2(p.z, rho * (1.0 - e2 * n / (n + h)));
        const bool done = std::abs(next - lat) < 1e-15;
        lat = next;
        if (done) break;
    }
    const double s = std::sin(lat);
    h = rho * std::cos(lat) + p.z * s - wgs84::kSemiMajorAxis * std::sqrt(1.0 - e2 * s * s);
    return {lat, lon, h};
}

Eigen::Matrix3d ecef_to_enu_rotation(const GeodeticPosition& ref) {
    const double sl = std::sin(ref.latitude), cl = std::cos(ref.latitude);
    const double so = std::sin(ref.longitude), co = std::cos(ref.longitude);
    Eigen::Matrix3d r;
    r << -so, co, 0.0,
         -sl * co, -sl * so, cl,
          cl * co, cl * so, sl;
    return r;
}

EnuVector ecef_to_enu(const EcefPosition& p, const GeodeticPosition& ref) {
    const Eigen::Vector3d d = p.vec() - geodetic_to_ecef(ref).vec();
    const Eigen::Vector3d enu = ecef_to_enu_rotation(ref) * d;
    return {enu.x(), enu.y(), enu.z()};
}

EcefPosition enu_to_ecef(const EnuVector& enu, const GeodeticPosition& ref) {
    const Eigen::Vector3d d = ecef_to_enu_rotation(ref).transpose() * enu.vec();
    return EcefPosition::from(geodetic_to_ecef(ref).vec() + d);
}

LookAngles elevation_azimuth(const EcefPosition& sat, const GeodeticPosition& rx) {
    const EnuVector los = ecef_to_enu(sat, rx);
    const double range = los.norm();
    if (range == 0.0) throw ZeroRange();
    double az = std::atan2(los.east, los.north);
    if (az < 0.0) az += 2.0 * std::numbers::pi;
    if (az >= 2.0 * std::numbers::pi) az = 0.0;
    const double el = std::asin(std::clamp(los.up / range, -1.0, 1.0));
    return {el, az};
}

}  // namespace snapweight
