#include <gtest/gtest.h>

#include <cmath>

#include "snapweight/errors.hpp"
#include "snapweight/features.hpp"
#include "support.hpp"

using namespace snapweight;
using snapweight::testing::noise_free_epoch;

namespace {

struct Fixture {
    Rng rng{51};
    snapweight::testing::SyntheticEpoch s = noise_free_epoch(rng, 6, 2);

    Epoch at(double t, std::initializer_list<double> cn0s) const {
        Epoch e = s.epoch;
        e.time = t;
        auto it = cn0s.begin();
        for (auto& m : e.measurements) m.cn0 = it == cn0s.end() ? 40.0 : *it++;
        return e;
    }
};

}  // namespace

TEST(Features, MeanAndSampleVariance) {
    Fixture f;
    TrackingHistory h;
    h.update_and_extract(f.at(0.0, {40.0}), f.s.rx);
    h.update_and_extract(f.at(0.2, {42.0}), f.s.rx);
    const auto out = h.update_and_extract(f.at(0.4, {44.0}), f.s.rx);
    EXPECT_DOUBLE_EQ(out[0].cn0_mean, 42.0);
    EXPECT_DOUBLE_EQ(out[0].cn0_var, 4.0);
    EXPECT_EQ(out[0].window_size, 3);
}

TEST(Features, ConstantWindowHasZeroVariance) {
    Fixture f;
    TrackingHistory h;
    std::vector<PerLinkFeatures> out;
    for (int k = 0; k < 10; ++k) out = h.update_and_extract(f.at(0.2 * k, {45.0}), f.s.rx);
    EXPECT_EQ(out[0].cn0_var, 0.0);
}

TEST(Features, FirstObservationUsesSentinel) {
    Fixture f;
    TrackingHistory h;
    const auto out = h.update_and_extract(f.at(0.0, {}), f.s.rx);
    for (const auto& l : out) {
        EXPECT_EQ(l.window_size, 1);
        EXPECT_EQ(l.cn0_var, 1e4);
    }
}

TEST(Features, WindowCappedAtTen) {
    Fixture f;
    TrackingHistory h;
    std::vector<PerLinkFeatures> out;
    for (int k = 0; k < 12; ++k) {
        out = h.update_and_extract(f.at(0.2 * k, {30.0 + k}), f.s.rx);
        EXPECT_EQ(out[0].window_size, std::min(k + 1, 10));
    }
    // Entries 2..11 remain: 32..41.
    EXPECT_DOUBLE_EQ(out[0].cn0_mean, 36.5);
    EXPECT_EQ(h.window_size(f.s.epoch.measurements[0].key()), 10u);
}

TEST(Features, LinksAreIsolated) {
    Fixture f;
    TrackingHistory h;
    for (int k = 0; k < 5; ++k) h.update_and_extract(f.at(0.2 * k, {30.0 + 3 * k, 40.0}), f.s.rx);
    // Drop link 0 from the next epoch; link 1 must be unaffected.
    Epoch e = f.at(1.0, {0.0, 40.0});
    e.measurements.erase(e.measurements.begin());
    const auto out = h.update_and_extract(e, f.s.rx);
    EXPECT_EQ(out[0].window_size, 6);
    EXPECT_EQ(out[0].cn0_var, 0.0);
    EXPECT_EQ(h.window_size(f.s.epoch.measurements[0].key()), 5u);
}

TEST(Features, GapRestartsWindow) {
    Fixture f;
    TrackingHistory h;
    for (int k = 0; k < 5; ++k) h.update_and_extract(f.at(0.2 * k, {}), f.s.rx);
    const auto out = h.update_and_extract(f.at(5.0, {}), f.s.rx);
    EXPECT_EQ(out[0].window_size, 1);
    EXPECT_EQ(out[0].cn0_var, 1e4);
}

TEST(Features, ElevationAndLockPassThrough) {
    Fixture f;
    TrackingHistory h;
    const Epoch e = f.at(0.0, {});
    const auto out = h.update_and_extract(e, f.s.rx);
    for (std::size_t i = 0; i < e.size(); ++i) {
        EXPECT_DOUBLE_EQ(out[i].lock_time, e.measurements[i].lock_time);
        EXPECT_DOUBLE_EQ(out[i].elevation, elevation_azimuth(e.measurements[i].sat_pos, f.s.rx).elevation);
    }
}

TEST(Features, TimeMustNotDecrease) {
    Fixture f;
    TrackingHistory h;
    h.update_and_extract(f.at(1.0, {}), f.s.rx);
    EXPECT_THROW(h.update_and_extract(f.at(0.8, {}), f.s.rx), NonMonotonicTime);
}
