#include <gtest/gtest.h>

#include <cmath>

#include "snapweight/errors.hpp"
#include "snapweight/eval.hpp"
#include "snapweight/sim.hpp"

using namespace snapweight;

namespace {

NavState displaced(const EcefPosition& truth, const EnuVector& d) {
    NavState s;
    s.position = enu_to_ecef(d, ecef_to_geodetic(truth));
    return s;
}

WeightPredictor zero_predictor(FeatureSet set) {
    WeightPredictor p;
    p.feature_set = set;
    p.model = LstmModel::zeros(feature_width(set), 4);
    p.normalizer.mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(feature_width(set)));
    p.normalizer.scale = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(feature_width(set)));
    return p;
}

}  // namespace

TEST(Eval, PositionErrorDecomposition) {
    const EcefPosition truth = geodetic_to_ecef({0.8, 0.1, 100.0});
    const PositionError zero = position_errors(displaced(truth, {0, 0, 0}), truth);
    EXPECT_NEAR(zero.horizontal, 0.0, 1e-9);
    EXPECT_NEAR(zero.vertical, 0.0, 1e-9);
    const PositionError en = position_errors(displaced(truth, {3, 4, 0}), truth);
    EXPECT_NEAR(en.horizontal, 5.0, 1e-9);
    EXPECT_NEAR(en.vertical, 0.0, 1e-9);
    const PositionError up = position_errors(displaced(truth, {0, 0, 2}), truth);
    EXPECT_NEAR(up.horizontal, 0.0, 1e-9);
    EXPECT_NEAR(up.vertical, 2.0, 1e-9);
}

TEST(Eval, QuantileRule) {
    const std::vector<double> threes(7, 3.0);
    for (double p : {0.0, 0.3, 0.68, 1.0}) EXPECT_EQ(empirical_quantile(threes, p), 3.0);
    const std::vector<double> v = {5, 1, 4, 2, 3};
    EXPECT_DOUBLE_EQ(empirical_quantile(v, 0.5), 3.0);
    EXPECT_DOUBLE_EQ(empirical_quantile(v, 0.68), 3.72);
    EXPECT_DOUBLE_EQ(empirical_quantile(v, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(empirical_quantile(v, 1.0), 5.0);
    EXPECT_THROW(empirical_quantile({}, 0.5), EmptySamples);
    EXPECT_THROW(empirical_quantile(v, 1.5), std::invalid_argument);
}

TEST(Eval, SummaryCensorsFailures) {
    std::vector<ErrorRecord> recs;
    for (int i = 0; i < 5; ++i) {
        ErrorRecord r;
        r.strategy = Strategy::EqualWeights;
        r.h_err = i + 1.0;
        r.v_err = 2.0 * (i + 1.0);
        r.converged = true;
        recs.push_back(r);
    }
    ErrorRecord failed;
    failed.strategy = Strategy::EqualWeights;
    failed.h_err = failed.v_err = NAN;
    recs.push_back(failed);
    const CdfSummary s = summarize(Strategy::EqualWeights, recs);
    EXPECT_EQ(s.count, 5u);
    EXPECT_EQ(s.failures, 1u);
    EXPECT_DOUBLE_EQ(s.failure_rate(), 1.0 / 6.0);
    EXPECT_DOUBLE_EQ(s.h.q68, 3.72);
    EXPECT_DOUBLE_EQ(s.v.q50, 6.0);
    EXPECT_THROW(summarize(Strategy::SotaFde, recs), EmptySamples);
}

TEST(Eval, StrategyNames) {
    for (Strategy s : all_strategies()) EXPECT_EQ(parse_strategy(to_string(s)), s);
    EXPECT_FALSE(parse_strategy("bogus").has_value());
}

TEST(Eval, NoiseFreeStrategiesAgreeWithTruth) {
    CampaignConfig cc;
    cc.seed = 101;
    cc.profiles[0].sessions = 3;
    cc.profiles[0].scenario.duration = 10.0;
    cc.profiles[0].scenario.noise_sigma = 0.0;
    for (auto& p : cc.profiles[0].scenario.nlos_curve) p.probability = 0.0;
    const Campaign camp = generate_campaign(cc);
    const auto epochs = process_split(camp.dataset, Split::Test, PipelineConfig{});
    StrategyModels models;
    models.feature_matrix = zero_predictor(FeatureSet::Full);
    models.residual_matrix = zero_predictor(FeatureSet::ResidualOnly);
    models.fde.sota = SotaWeightParams{0.25, 1.5e4, 0.0};
    const auto strategies = all_strategies();
    const ComparisonReport rep = compare_strategies(epochs, strategies, models, 2);
    ASSERT_EQ(rep.summaries.size(), strategies.size());
    EXPECT_EQ(rep.records.size(), epochs.size() * strategies.size());
    for (const auto& r : rep.records) {
        ASSERT_TRUE(r.converged) << to_string(r.strategy);
        EXPECT_LT(std::hypot(r.h_err, r.v_err), 1e-6) << to_string(r.strategy);
    }
}

TEST(Eval, MissingModelNamesStrategy) {
    StrategyModels models;
    const std::vector<Strategy> s = {Strategy::ResidualMatrix};
    try {
        compare_strategies({}, s, models);
        FAIL();
    } catch (const ConfigInvalid& e) {
        EXPECT_EQ(e.field(), "residual_matrix");
    }
}

TEST(Eval, DeterministicAcrossJobCounts) {
    CampaignConfig cc;
    cc.seed = 102;
    cc.profiles[0].sessions = 3;
    cc.profiles[0].scenario.duration = 10.0;
    const Campaign camp = generate_campaign(cc);
    const auto epochs = process_split(camp.dataset, Split::Test, PipelineConfig{}, 2);
    StrategyModels models;
    models.fde.sota = SotaWeightParams{0.25, 1.5e4, 0.0};
    const std::vector<Strategy> s = {Strategy::GroundTruth, Strategy::SotaFde, Strategy::EqualWeights};
    const ComparisonReport a = compare_strategies(epochs, s, models, 1);
    const ComparisonReport b = compare_strategies(epochs, s, models, 3);
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        EXPECT_EQ(a.records[i].session_id, b.records[i].session_id);
        EXPECT_EQ(a.records[i].converged, b.records[i].converged);
        if (a.records[i].converged) {
            EXPECT_EQ(a.records[i].h_err, b.records[i].h_err);
        }
    }
}
