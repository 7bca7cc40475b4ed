#include <gtest/gtest.h>

#include <cmath>

#include "snapweight/errors.hpp"
#include "snapweight/geo.hpp"
#include "support.hpp"

using namespace snapweight;
using snapweight::testing::kDeg;

TEST(Geo, EquatorPrimeMeridian) {
    const EcefPosition p = geodetic_to_ecef({0.0, 0.0, 0.0});
    EXPECT_DOUBLE_EQ(p.x, 6378137.0);
    EXPECT_NEAR(p.y, 0.0, 1e-9);
    EXPECT_NEAR(p.z, 0.0, 1e-9);
}

TEST(Geo, NorthPoleIsSemiMinorAxis) {
    const EcefPosition p = geodetic_to_ecef({std::numbers::pi / 2, 0.0, 0.0});
    EXPECT_NEAR(p.x, 0.0, 1e-9);
    EXPECT_NEAR(p.y, 0.0, 1e-9);
    EXPECT_NEAR(p.z, 6356752.314245, 1e-6);
}

TEST(Geo, InverseAtEquator) {
    const GeodeticPosition g = ecef_to_geodetic({6378137.0, 0.0, 0.0});
    EXPECT_NEAR(g.latitude, 0.0, 1e-15);
    EXPECT_NEAR(g.longitude, 0.0, 1e-15);
    EXPECT_NEAR(g.height, 0.0, 1e-9);

    const GeodeticPosition q = ecef_to_geodetic({0.0, 6378137.0, 0.0});
    EXPECT_NEAR(q.latitude, 0.0, 1e-15);
    EXPECT_NEAR(q.longitude, std::numbers::pi / 2, 1e-15);
    EXPECT_NEAR(q.height, 0.0, 1e-9);
}

TEST(Geo, RoundTripRandomPoints) {
    Rng rng(11);
    double worst = 0.0, worst_h = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const GeodeticPosition g{rng.uniform(-89.9, 89.9) * kDeg, rng.uniform(-180.0, 180.0) * kDeg,
                                 rng.uniform(-100.0, 2.5e7)};
        const EcefPosition p = geodetic_to_ecef(g);
        const EcefPosition back = geodetic_to_ecef(ecef_to_geodetic(p));
        worst = std::max(worst, (p.vec() - back.vec()).norm());

        const GeodeticPosition low{g.latitude, g.longitude, rng.uniform(0.0, 1e4)};
        worst_h = std::max(worst_h, std::abs(ecef_to_geodetic(geodetic_to_ecef(low)).height - low.height));
    }
    EXPECT_LT(worst, 1e-4);
    EXPECT_LT(worst_h, 1e-4);
}

TEST(Geo, NearGeocenterThrows) { EXPECT_THROW(ecef_to_geodetic({10.0, 0.0, 0.0}), NearGeocenter); }

TEST(Geo, EnuUpAndIdentity) {
    const GeodeticPosition ref{48.85 * kDeg, 2.35 * kDeg, 35.0};
    const EnuVector up = ecef_to_enu(geodetic_to_ecef({ref.latitude, ref.longitude, ref.height + 10.0}), ref);
    EXPECT_NEAR(up.east, 0.0, 1e-8);
    EXPECT_NEAR(up.north, 0.0, 1e-8);
    EXPECT_NEAR(up.up, 10.0, 1e-8);

    const EnuVector zero = ecef_to_enu(geodetic_to_ecef(ref), ref);
    EXPECT_EQ(zero.east, 0.0);
    EXPECT_EQ(zero.north, 0.0);
    EXPECT_EQ(zero.up, 0.0);
}

TEST(Geo, EnuPreservesNorm) {
    Rng rng(12);
    for (int i = 0; i < 1000; ++i) {
        const GeodeticPosition ref = snapweight::testing::random_site(rng);
        const Eigen::Vector3d d(rng.uniform(-1e6, 1e6), rng.uniform(-1e6, 1e6), rng.uniform(-1e6, 1e6));
        const EcefPosition p = EcefPosition::from(geodetic_to_ecef(ref).vec() + d);
        EXPECT_NEAR(ecef_to_enu(p, ref).norm(), d.norm(), 1e-9 * d.norm());
        const EcefPosition back = enu_to_ecef(ecef_to_enu(p, ref), ref);
        EXPECT_NEAR((back.vec() - p.vec()).norm(), 0.0, 1e-6);
    }
}

TEST(Geo, ElevationAtZenithAndHorizon) {
    const GeodeticPosition rx{30.0 * kDeg, 60.0 * kDeg, 0.0};
    const EcefPosition zenith = enu_to_ecef({0.0, 0.0, 2e7}, rx);
    EXPECT_NEAR(elevation_azimuth(zenith, rx).elevation, std::numbers::pi / 2, 1e-12);

    const LookAngles north = elevation_azimuth(enu_to_ecef({0.0, 1e6, 0.0}, rx), rx);
    EXPECT_NEAR(north.elevation, 0.0, 1e-12);
    EXPECT_NEAR(north.azimuth, 0.0, 1e-12);
}

TEST(Geo, ElevationMatchesExplicitEnuOracle) {
    Rng rng(13);
    for (int i = 0; i < 1000; ++i) {
        const GeodeticPosition rx = snapweight::testing::random_site(rng);
        const EcefPosition sat{rng.uniform(-2.6e7, 2.6e7), rng.uniform(-2.6e7, 2.6e7), rng.uniform(-2.6e7, 2.6e7)};
        const Eigen::Vector3d d = sat.vec() - geodetic_to_ecef(rx).vec();
        // Oracle: rotate with the textbook ENU matrix, then trigonometry.
        const double sl = std::sin(rx.latitude), cl = std::cos(rx.latitude);
        const double so = std::sin(rx.longitude), co = std::cos(rx.longitude);
        const double e = -so * d.x() + co * d.y();
        const double n = -sl * co * d.x() - sl * so * d.y() + cl * d.z();
        const double u = cl * co * d.x() + cl * so * d.y() + sl * d.z();
        const double el = std::asin(u / std::sqrt(e * e + n * n + u * u));
        double az = std::atan2(e, n);
        if (az < 0) az += 2 * std::numbers::pi;
        const LookAngles la = elevation_azimuth(sat, rx);
        EXPECT_NEAR(la.elevation, el, 1e-12);
        EXPECT_NEAR(la.azimuth, az, 1e-9);
    }
}

TEST(Geo, ZeroRangeThrows) {
    const GeodeticPosition rx{0.1, 0.2, 10.0};
    EXPECT_THROW(elevation_azimuth(geodetic_to_ecef(rx), rx), ZeroRange);
}
