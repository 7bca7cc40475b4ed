#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "snapweight/baselines.hpp"
#include "snapweight/errors.hpp"
#include "snapweight/pipeline.hpp"
#include "snapweight/sim.hpp"
#include "support.hpp"

using namespace snapweight;
using snapweight::testing::kDeg;
using snapweight::testing::noise_free_epoch;
using snapweight::testing::position_error;

namespace {

std::vector<double> elevations_of(const snapweight::testing::SyntheticEpoch& s) {
    std::vector<double> out;
    for (const auto& m : s.epoch.measurements) out.push_back(elevation_azimuth(m.sat_pos, s.rx).elevation);
    return out;
}

}  // namespace

TEST(Sota, ZenithWithoutAcceleration) {
    const SotaWeightParams p{0.3, 2e4, 0.1};
    EXPECT_DOUBLE_EQ(sota_sigma2(std::numbers::pi / 2, 40.0, 0.0, p), 0.3 + 2e4 / 1e4);
}

TEST(Sota, ThirtyDegreesIsFourTimesZenith) {
    const SotaWeightParams p{0.3, 2e4, 0.1};
    const double ratio = sota_sigma2(std::numbers::pi / 6, 35.0, 1.5, p) / sota_sigma2(std::numbers::pi / 2, 35.0, 1.5, p);
    EXPECT_NEAR(ratio, 4.0, 1e-12);
}

TEST(Sota, AtOrBelowMaskThrows) {
    EXPECT_THROW(sota_sigma2(kDefaultElevationMask, 40.0, 0.0, {}), HorizonSingularity);
    EXPECT_THROW(sota_sigma2(-0.1, 40.0, 0.0, {}, 0.0), HorizonSingularity);
}

TEST(Sota, CalibrationRecoversGeneratingModel) {
    const SotaWeightParams truth{0.25, 1.5e4, 0.05};
    Rng rng(81);
    std::vector<CalibrationSample> samples;
    for (int i = 0; i < 200000; ++i) {
        CalibrationSample s;
        s.elevation = rng.uniform(6.0, 89.0) * kDeg;
        s.cn0 = rng.uniform(20.0, 50.0);
        s.accel = rng.uniform(0.0, 4.0);
        s.error = rng.normal(0.0, std::sqrt(sota_sigma2(s.elevation, s.cn0, s.accel, truth)));
        samples.push_back(s);
    }
    const SotaCalibration cal = calibrate_sota(samples);
    EXPECT_TRUE(cal.accel_identified);
    EXPECT_NEAR(cal.params.zenith, truth.zenith, 0.1 * truth.zenith);
    EXPECT_NEAR(cal.params.cn0, truth.cn0, 0.1 * truth.cn0);
    EXPECT_NEAR(cal.params.accel, truth.accel, 0.1 * truth.accel);
}

TEST(Sota, ZeroAccelerationIsFlagged) {
    const SotaWeightParams truth{0.5, 1e4, 0.0};
    Rng rng(82);
    std::vector<CalibrationSample> samples;
    for (int i = 0; i < 50000; ++i) {
        CalibrationSample s{rng.uniform(6.0, 89.0) * kDeg, rng.uniform(20.0, 50.0), 0.0, 0.0};
        s.error = rng.normal(0.0, std::sqrt(sota_sigma2(s.elevation, s.cn0, 0.0, truth)));
        samples.push_back(s);
    }
    const SotaCalibration cal = calibrate_sota(samples);
    EXPECT_FALSE(cal.accel_identified);
    EXPECT_EQ(cal.params.accel, 0.0);
    // Non-negative coefficients make the fit nonincreasing in C/N0.
    double prev = std::numeric_limits<double>::infinity();
    for (double cn0 = 15.0; cn0 <= 55.0; cn0 += 1.0) {
        const double v = sota_sigma2(0.7, cn0, 0.0, cal.params);
        EXPECT_LE(v, prev);
        prev = v;
    }
}

TEST(Sota, EmptyCalibrationThrows) { EXPECT_THROW(calibrate_sota({}), EmptySplit); }

TEST(Sota, CalibratedSigmaTracksSimulatorBins) {
    CampaignConfig cc;
    cc.seed = 4;
    cc.profiles[0].sessions = 5;
    cc.profiles[0].scenario.duration = 200.0;
    // Line-of-sight only, so the per-bin spread is the noise model alone.
    for (auto& p : cc.profiles[0].scenario.nlos_curve) p.probability = 0.0;
    const Campaign camp = generate_campaign(cc);
    const auto samples = calibration_samples(camp.dataset, Split::Train, PipelineConfig{});
    const SotaCalibration cal = calibrate_sota(samples);
    std::map<int, std::pair<double, double>> bins;  // sum e^2, sum sigma^2 per 10 deg
    std::map<int, int> counts;
    for (const auto& s : samples) {
        const int b = static_cast<int>(s.elevation / (10.0 * kDeg));
        bins[b].first += s.error * s.error;
        bins[b].second += sota_sigma2(s.elevation, s.cn0, s.accel, cal.params);
        ++counts[b];
    }
    for (const auto& [b, v] : bins) {
        if (counts[b] < 500) continue;
        const double empirical = std::sqrt(v.first / counts[b]);
        const double model = std::sqrt(v.second / counts[b]);
        EXPECT_NEAR(model / empirical, 1.0, 0.3) << "elevation bin " << b;
    }
}

TEST(Fde, NoiseFreeKeepsEverything) {
    Rng rng(83);
    auto s = noise_free_epoch(rng, 10, 2);
    const FdeResult r = fde_solve(s.epoch, FdeConfig{});
    EXPECT_TRUE(r.excluded.empty());
    EXPECT_LT(position_error(r.report.state, s.truth), 1e-6);
}

TEST(Fde, ExcludesSingleLargeFault) {
    Rng rng(84);
    int correct = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        auto s = noise_free_epoch(rng, 12, 1);
        for (auto& m : s.epoch.measurements) m.pseudorange += rng.normal(0.0, 1.0);
        const std::size_t k = rng.below(12);
        s.epoch.measurements[k].pseudorange += 100.0;
        const FdeResult r = fde_solve(s.epoch, FdeConfig{});
        correct += !r.excluded.empty() && r.excluded.front() == k ? 1 : 0;
    }
    EXPECT_GE(correct, 990);
}

TEST(Fde, UsesVarianceModelOnSurvivors) {
    Rng rng(85);
    auto s = noise_free_epoch(rng, 10, 1);
    for (auto& m : s.epoch.measurements) m.pseudorange += rng.normal(0.0, 1.0);
    FdeConfig cfg;
    cfg.sota = SotaWeightParams{0.25, 1.5e4, 0.0};
    const auto els = elevations_of(s);
    const FdeResult r = fde_solve(s.epoch, cfg, els);
    const SolveReport direct = solve_wls(s.epoch, sota_weights(s.epoch, els, 0.0, *cfg.sota));
    EXPECT_LT(position_error(r.report.state, direct.state), 1e-6);
    EXPECT_THROW(fde_solve(s.epoch, cfg), ShapeMismatch);
}

TEST(Fde, ConfigValidation) {
    FdeConfig c;
    c.threshold = 0.0;
    EXPECT_THROW(c.validate(), ConfigInvalid);
}
