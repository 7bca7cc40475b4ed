#include <gtest/gtest.h>

#include <cmath>

#include "snapweight/errors.hpp"
#include "snapweight/residuals.hpp"
#include "support.hpp"

using namespace snapweight;
using snapweight::testing::noise_free_epoch;

namespace {

// Brute force: N independent subset solves, residuals composed by hand.
Eigen::MatrixXd brute_force(const Epoch& epoch, double gamma) {
    const auto n = static_cast<Eigen::Index>(epoch.size());
    const SolveReport full = solve_wls(epoch, equal_weights(epoch));
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index row = 0; row < n; ++row) {
        WeightVector w = equal_weights(epoch);
        w[static_cast<std::size_t>(row)] = 0.0;
        const SolveReport r = solve_wls(epoch, w, full.state);
        for (Eigen::Index col = 0; col < n; ++col)
            m(row, col) = row == col ? gamma : residual(r.state, epoch.measurements[static_cast<std::size_t>(col)]);
    }
    return m;
}

}  // namespace

TEST(Residuals, NoiseFreeIsZeroOffDiagonal) {
    Rng rng(41);
    auto s = noise_free_epoch(rng, 10, 1);
    const ResidualMatrix m = build_residual_matrix(s.epoch);
    ASSERT_EQ(m.size(), 10u);
    for (Eigen::Index i = 0; i < 10; ++i)
        for (Eigen::Index j = 0; j < 10; ++j) {
            if (i == j)
                EXPECT_EQ(m.values(i, j), kResidualSentinel);
            else
                EXPECT_LT(std::abs(m.values(i, j)), 1e-6);
        }
    EXPECT_TRUE(m.failed_rows.empty());
}

TEST(Residuals, BiasedMeasurementIsolatedByItsRow) {
    Rng rng(42);
    auto s = noise_free_epoch(rng, 10, 1);
    const std::size_t k = 4;
    s.epoch.measurements[k].pseudorange += 50.0;
    const ResidualMatrix m = build_residual_matrix(s.epoch);
    const auto kk = static_cast<Eigen::Index>(k);
    for (Eigen::Index j = 0; j < 10; ++j)
        if (j != kk) {
            EXPECT_LT(std::abs(m.values(kk, j)), 1e-6);
        }
    for (Eigen::Index i = 0; i < 10; ++i) {
        if (i == kk) continue;
        double worst = 0.0;
        for (Eigen::Index j = 0; j < 10; ++j)
            if (j != i) worst = std::max(worst, std::abs(m.values(i, j)));
        EXPECT_GT(worst, 1.0);
    }
}

TEST(Residuals, MatchesBruteForceSubsetSolves) {
    Rng rng(43);
    for (int trial = 0; trial < 100; ++trial) {
        auto s = noise_free_epoch(rng, 6 + rng.below(10), 1 + rng.below(2));
        for (auto& m : s.epoch.measurements) m.pseudorange += rng.normal(0.0, 3.0);
        s.epoch.measurements[rng.below(s.epoch.size())].pseudorange += rng.exponential(30.0);
        const ResidualMatrix m = build_residual_matrix(s.epoch);
        const Eigen::MatrixXd oracle = brute_force(s.epoch, kResidualSentinel);
        EXPECT_LT((m.values - oracle).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(Residuals, RowIgnoresItsOwnPseudorange) {
    Rng rng(44);
    for (int trial = 0; trial < 20; ++trial) {
        auto s = noise_free_epoch(rng, 9, 2);
        for (auto& m : s.epoch.measurements) m.pseudorange += rng.normal(0.0, 2.0);
        const std::size_t n = rng.below(s.epoch.size());
        Epoch shifted = s.epoch;
        shifted.measurements[n].pseudorange += rng.uniform(-100.0, 100.0);
        // Seed both with the same fix so only the subset solve differs.
        const SolveReport full = solve_wls(s.epoch, equal_weights(s.epoch));
        const ResidualMatrix a = build_residual_matrix(s.epoch, {}, full.state);
        const ResidualMatrix b = build_residual_matrix(shifted, {}, full.state);
        const auto r = static_cast<Eigen::Index>(n);
        for (Eigen::Index j = 0; j < a.values.cols(); ++j)
            if (j != r) {
                EXPECT_NEAR(a.values(r, j), b.values(r, j), 1e-9);
            }
        EXPECT_EQ(b.values(r, r), kResidualSentinel);
    }
}

TEST(Residuals, TooFewMeasurementsThrows) {
    Rng rng(45);
    auto s = noise_free_epoch(rng, 4, 1);
    EXPECT_THROW(build_residual_matrix(s.epoch), NotEnoughMeasurements);
}

TEST(Residuals, WithoutMeasurementDropsOne) {
    Rng rng(46);
    auto s = noise_free_epoch(rng, 7, 1);
    const Epoch e = without_measurement(s.epoch, 2);
    EXPECT_EQ(e.size(), 6u);
    EXPECT_EQ(e.measurements[2], s.epoch.measurements[3]);
}
