#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "snapweight/features.hpp"
#include "snapweight/lstm.hpp"
#include "snapweight/model.hpp"
#include "snapweight/residuals.hpp"
#include "snapweight/solver.hpp"

namespace snapweight {

/// Which columns feed the network.
enum class FeatureSet {
    Full,          ///< residual-row summary + per-link features
    ResidualOnly,  ///< residual-row summary only
    LabelLeak,     ///< Full plus the label itself; pipeline sanity checks only
};

std::string_view to_string(FeatureSet s);
std::optional<FeatureSet> parse_feature_set(std::string_view s);

inline constexpr std::size_t kResidualSummaryWidth = 8;
inline constexpr std::size_t kPerLinkWidth = 6;

std::size_t feature_width(FeatureSet s);

/// Fixed-width summary of the off-diagonal entries of one residual-matrix
/// row (clamped to +-gamma): mean, sample std, min, max, median, mean |r|,
/// count |r| > 5 m, count |r| > 20 m. All zero when the row is empty.
std::array<double, kResidualSummaryWidth> summarize_residual_row(const ResidualMatrix& m,
                                                                 std::size_t row);

/// Unnormalized input rows. `labels` is required only for LabelLeak.
Eigen::MatrixXd raw_feature_rows(const ResidualMatrix& m,
                                 std::span<const PerLinkFeatures> links, FeatureSet set,
                                 std::span<const double> labels = {});

/// Spread below which a feature column is treated as constant.
inline constexpr double kMinFeatureScale = 1e-6;

/// Per-column z-score frozen from training rows.
struct Normalizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;

    static Normalizer fit(std::span<const Eigen::MatrixXd> blocks);
    FeatureMatrix apply(const Eigen::MatrixXd& raw) const;
};

inline constexpr double kMinWeight = 1e-8;
inline constexpr double kMaxWeight = 1e4;

/// omega = exp(-2 q), clamped to [1e-8, 1e4] 1/m^2.
WeightVector weights_from_quality(std::span<const double> quality);

/// Trained network bundled with its input convention.
struct WeightPredictor {
    FeatureSet feature_set = FeatureSet::Full;
    Normalizer normalizer;
    LstmModel model;

    QualityFactors quality(const Eigen::MatrixXd& raw_rows) const;
    WeightVector weights(const Eigen::MatrixXd& raw_rows) const;
};

WeightVector predict_weights(const LstmModel& model, const FeatureMatrix& fm);

/// How the truth clock biases are obtained at the fixed truth position.
enum class LabelClock {
    EqualWeight,  ///< equal-weight clock-only least squares (per-constellation mean)
    Median,       ///< per-constellation median of the clock residuals
};

std::string_view to_string(LabelClock c);
std::optional<LabelClock> parse_label_clock(std::string_view s);

/// Truth position plus clock-only estimate. Throws MissingTruth.
NavState truth_state(const Epoch& epoch, LabelClock clock = LabelClock::EqualWeight);

inline constexpr double kLabelFloor = 0.01;  // m

/// log(max(|rho - h(X_true)|, eps)) per measurement. Throws MissingTruth.
std::vector<double> make_labels(const Epoch& epoch, LabelClock clock = LabelClock::EqualWeight,
                                double eps = kLabelFloor);

/// 1 / max(|rho - h(X_true)|, eps)^2, the ground-truth weighting.
WeightVector ground_truth_weights(const Epoch& epoch, LabelClock clock = LabelClock::EqualWeight,
                                  double eps = kLabelFloor);

}  // namespace snapweight
