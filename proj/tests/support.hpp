#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "snapweight/geo.hpp"
#include "snapweight/model.hpp"
#include "snapweight/rng.hpp"

namespace snapweight::testing {

inline constexpr double kDeg = std::numbers::pi / 180.0;

struct SyntheticEpoch {
    Epoch epoch;
    NavState truth;
    GeodeticPosition rx;
};

inline GeodeticPosition random_site(Rng& rng) {
    return {rng.uniform(-70.0, 70.0) * kDeg, rng.uniform(-180.0, 180.0) * kDeg, rng.uniform(0.0, 500.0)};
}

/// Range plus clock term computed in long double, independent of the library.
inline double exact_pseudorange(const EcefPosition& rx, const EcefPosition& sat, double clock_s) {
    const long double dx = static_cast<long double>(sat.x) - rx.x;
    const long double dy = static_cast<long double>(sat.y) - rx.y;
    const long double dz = static_cast<long double>(sat.z) - rx.z;
    return static_cast<double>(std::sqrt(dx * dx + dy * dy + dz * dz) +
                               static_cast<long double>(kSpeedOfLight) * clock_s);
}

/// Noise-free epoch with `n` satellites spread over `constellations`, every
/// satellite between 10 and 85 deg elevation at 2.0e7 to 2.6e7 m range.
inline SyntheticEpoch noise_free_epoch(Rng& rng, std::size_t n, std::size_t constellations = 1,
                                       double min_elevation = 10.0 * kDeg) {
    SyntheticEpoch s;
    s.rx = random_site(rng);
    s.truth.position = geodetic_to_ecef(s.rx);
    const Constellation all[] = {Constellation::Gps, Constellation::Galileo, Constellation::Glonass,
                                 Constellation::Beidou};
    for (std::size_t c = 0; c < constellations; ++c) s.truth.clock_bias[all[c]] = rng.uniform(-1e-3, 1e-3);
    const Eigen::Matrix3d to_ecef = ecef_to_enu_rotation(s.rx).transpose();
    for (std::size_t i = 0; i < n; ++i) {
        const Constellation c = all[i % constellations];
        const double el = rng.uniform(min_elevation, 85.0 * kDeg);
        // Spread azimuths so small epochs still have usable geometry.
        const double az = 2.0 * std::numbers::pi * (static_cast<double>(i) + rng.uniform(0.0, 0.8)) /
                          static_cast<double>(n);
        const Eigen::Vector3d los(std::cos(el) * std::sin(az), std::cos(el) * std::cos(az), std::sin(el));
        const double range = rng.uniform(2.0e7, 2.6e7);
        PseudorangeMeasurement m;
        m.constellation = c;
        m.sv_id = static_cast<int>(i / constellations) + 1;
        m.band = Band::L1;
        m.sat_pos = EcefPosition::from(s.truth.position.vec() + range * (to_ecef * los));
        m.pseudorange = exact_pseudorange(s.truth.position, m.sat_pos, s.truth.clock_bias.at(c));
        m.cn0 = rng.uniform(30.0, 50.0);
        m.lock_time = rng.uniform(0.0, 100.0);
        s.epoch.measurements.push_back(m);
    }
    s.epoch.truth = s.truth.position;
    canonicalize(s.epoch);
    return s;
}

inline double position_error(const NavState& a, const NavState& b) {
    return (a.position.vec() - b.position.vec()).norm();
}

}  // namespace snapweight::testing
