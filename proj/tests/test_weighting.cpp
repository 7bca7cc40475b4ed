#include <gtest/gtest.h>

#include <cmath>

#include "snapweight/errors.hpp"
#include "snapweight/weighting.hpp"
#include "support.hpp"

using namespace snapweight;
using snapweight::testing::noise_free_epoch;

TEST(Weighting, QualityToWeight) {
    const double q[] = {std::log(2.0), 20.0, -20.0};
    const WeightVector w = weights_from_quality(q);
    EXPECT_DOUBLE_EQ(w[0], 0.25);
    EXPECT_EQ(w[1], 1e-8);
    EXPECT_EQ(w[2], 1e4);
}

TEST(Weighting, LabelOfTwoMeterError) {
    Rng rng(71);
    auto s = noise_free_epoch(rng, 8, 1);
    // Shift one pseudorange; the median clock keeps the others at zero error.
    s.epoch.measurements[2].pseudorange += 2.0;
    const auto labels = make_labels(s.epoch, LabelClock::Median);
    EXPECT_NEAR(labels[2], std::log(2.0), 1e-9);
    EXPECT_NEAR(weights_from_quality(labels)[2], 0.25, 1e-9);
    const WeightVector gt = ground_truth_weights(s.epoch, LabelClock::Median);
    EXPECT_NEAR(gt[2], 0.25, 1e-9);
}

TEST(Weighting, NoiseFreeLabelIsClamped) {
    Rng rng(72);
    auto s = noise_free_epoch(rng, 8, 2);
    for (LabelClock clock : {LabelClock::EqualWeight, LabelClock::Median}) {
        for (double l : make_labels(s.epoch, clock)) EXPECT_DOUBLE_EQ(l, std::log(0.01));
        for (double w : ground_truth_weights(s.epoch, clock)) EXPECT_NEAR(w, 1e4, 1e-6);
    }
}

TEST(Weighting, LabelsImplyDirectWeights) {
    Rng rng(73);
    std::size_t checked = 0;
    while (checked < 1000) {
        auto s = noise_free_epoch(rng, 10, 2);
        for (auto& m : s.epoch.measurements) m.pseudorange += rng.normal(0.0, 3.0);
        s.epoch.measurements[0].pseudorange += rng.exponential(30.0);
        const auto labels = make_labels(s.epoch);
        const auto implied = weights_from_quality(labels);
        const NavState truth = truth_state(s.epoch);
        for (std::size_t i = 0; i < labels.size(); ++i, ++checked) {
            // Direct: inverse square of the error at the true state, floored at 1 cm.
            const double e = std::max(std::abs(residual(truth, s.epoch.measurements[i])), 0.01);
            EXPECT_NEAR(implied[i], 1.0 / (e * e), 1e-9 / (e * e));
        }
    }
}

TEST(Weighting, MissingTruthThrows) {
    Rng rng(74);
    auto s = noise_free_epoch(rng, 6);
    s.epoch.truth.reset();
    EXPECT_THROW(make_labels(s.epoch), MissingTruth);
}

TEST(Weighting, FeatureWidths) {
    EXPECT_EQ(feature_width(FeatureSet::Full), 14u);
    EXPECT_EQ(feature_width(FeatureSet::ResidualOnly), 8u);
    EXPECT_EQ(feature_width(FeatureSet::LabelLeak), 15u);
    for (auto f : {FeatureSet::Full, FeatureSet::ResidualOnly, FeatureSet::LabelLeak})
        EXPECT_EQ(parse_feature_set(to_string(f)), f);
}

TEST(Weighting, ResidualRowSummary) {
    ResidualMatrix m;
    m.values = Eigen::MatrixXd::Constant(5, 5, 0.0);
    m.values.diagonal().setConstant(kResidualSentinel);
    m.values.row(1) << 3.0, kResidualSentinel, -1.0, 30.0, 8.0;
    const auto s = summarize_residual_row(m, 1);
    EXPECT_DOUBLE_EQ(s[0], 10.0);                          // mean
    EXPECT_NEAR(s[1], std::sqrt((49 + 121 + 400 + 4) / 3.0), 1e-12);  // sample std
    EXPECT_EQ(s[2], -1.0);
    EXPECT_EQ(s[3], 30.0);
    EXPECT_DOUBLE_EQ(s[4], 5.5);  // median
    EXPECT_DOUBLE_EQ(s[5], 10.5);
    EXPECT_EQ(s[6], 2.0);  // |r| > 5
    EXPECT_EQ(s[7], 1.0);  // |r| > 20
}

TEST(Weighting, NormalizerZScores) {
    Eigen::MatrixXd a(3, 2);
    a << 1, 10, 2, 10, 3, 10;
    const std::vector<Eigen::MatrixXd> blocks = {a};
    const Normalizer n = Normalizer::fit(blocks);
    const FeatureMatrix f = n.apply(a);
    EXPECT_NEAR(f.rows.col(0).mean(), 0.0, 1e-12);
    EXPECT_TRUE(f.rows.col(1).allFinite());
}
