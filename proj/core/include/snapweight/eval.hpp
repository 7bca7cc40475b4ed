#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "snapweight/baselines.hpp"
#include "snapweight/pipeline.hpp"
#include "snapweight/weighting.hpp"

namespace snapweight {

enum class Strategy {
    GroundTruth,     ///< weights from the true errors
    FeatureMatrix,   ///< network on residual summaries plus per-link features
    ResidualMatrix,  ///< network on residual summaries only
    SotaFde,         ///< residual-test exclusion, then the parametric variance model
    EqualWeights,
};

std::string_view to_string(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view s);
std::vector<Strategy> all_strategies();

struct PositionError {
    double horizontal = 0.0;  ///< m
    double vertical = 0.0;    ///< |up|, m
};

/// Error decomposed in the ENU frame at the truth position.
PositionError position_errors(const NavState& estimate, const EcefPosition& truth);

/// Linear interpolation between order statistics at zero-based rank
/// p * (n - 1). Throws EmptySamples, std::invalid_argument for p outside [0, 1].
double empirical_quantile(std::span<const double> samples, double p);

struct ErrorRecord {
    std::string session_id;
    double t = 0.0;
    Strategy strategy = Strategy::EqualWeights;
    double h_err = 0.0;  ///< NaN when the epoch failed
    double v_err = 0.0;
    bool converged = false;
    std::size_t n_sv = 0;
    /// Rows excluded or carrying the minimum weight.
    std::size_t n_zero_weight = 0;
};

struct Quantiles {
    double q50 = 0.0;
    double q68 = 0.0;
    double q95 = 0.0;
};

struct CdfSummary {
    Strategy strategy = Strategy::EqualWeights;
    std::vector<double> horizontal;  ///< sorted, converged epochs only
    std::vector<double> vertical;    ///< sorted
    Quantiles h;
    Quantiles v;
    std::size_t count = 0;     ///< converged epochs
    std::size_t failures = 0;  ///< censored epochs
    double failure_rate() const;
};

/// Sorted samples and quantiles of one strategy's converged records.
/// Throws EmptySamples when none converged.
CdfSummary summarize(Strategy strategy, std::span<const ErrorRecord> records);

struct StrategyModels {
    std::optional<WeightPredictor> feature_matrix;
    std::optional<WeightPredictor> residual_matrix;
    FdeConfig fde;  ///< `fde.sota` holds the calibrated variance model
    LabelClock label_clock = LabelClock::Median;
    SolverConfig solver;
};

struct ComparisonReport {
    std::vector<Strategy> strategies;
    /// Epoch-major, strategies in the requested order within each epoch.
    std::vector<ErrorRecord> records;
    /// One per strategy; empty count when every epoch failed.
    std::vector<CdfSummary> summaries;

    const CdfSummary* summary(Strategy s) const;
};

/// One strategy on one processed epoch. Failures become censored records.
ErrorRecord evaluate_epoch(const ProcessedEpoch& pe, Strategy strategy, const StrategyModels& models);

/// Runs every strategy on every epoch that carries truth. Throws
/// ConfigInvalid naming a strategy whose model is missing.
ComparisonReport compare_strategies(std::span<const ProcessedEpoch> epochs,
                                    std::span<const Strategy> strategies,
                                    const StrategyModels& models, std::size_t jobs = 1);

}  // namespace snapweight
