#pragma once

#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "snapweight/model.hpp"
#include "snapweight/solver.hpp"

namespace snapweight {

inline constexpr double kDefaultElevationMask = 5.0 * std::numbers::pi / 180.0;

/// Coefficients of the elevation / C/N0 / acceleration variance model
///   sigma^2 = (zenith + cn0 / (C/N0)_linear + accel * a^2) / sin^2(elevation)
/// with (C/N0)_linear = 10^(dBHz / 10) in Hz.
struct SotaWeightParams {
    double zenith = 0.0;  ///< m^2
    double cn0 = 0.0;     ///< m^2 Hz
    double accel = 0.0;   ///< m^2 per (m/s^2)^2
};

/// Throws HorizonSingularity when elevation <= mask.
double sota_sigma2(double elevation, double cn0_dbhz, double accel, const SotaWeightParams& p,
                   double mask = kDefaultElevationMask);

WeightVector sota_weights(const Epoch& epoch, std::span<const double> elevations, double accel,
                          const SotaWeightParams& p, double mask = kDefaultElevationMask);

struct CalibrationSample {
    double elevation = 0.0;  ///< rad
    double cn0 = 0.0;        ///< dB-Hz
    double accel = 0.0;      ///< m/s^2
    double error = 0.0;      ///< pseudorange error at the true position, m
};

struct CalibrationConfig {
    std::size_t elevation_bins = 9;
    double cn0_bin_width = 3.0;  ///< dB-Hz
    std::size_t accel_bins = 4;
    std::size_t min_bin_count = 8;
    /// Samples with |error| above k robust sigmas of their bin are dropped
    /// before averaging; <= 0 keeps everything.
    double outlier_k = 4.0;
    double mask = kDefaultElevationMask;
};

struct SotaCalibration {
    SotaWeightParams params;
    bool accel_identified = false;  ///< false when every sample has a == 0
    std::size_t samples_used = 0;
    std::size_t bins_used = 0;
};

/// Non-negative least-squares fit of the variance model to squared errors,
/// averaged over (elevation, C/N0, acceleration) bins. Throws EmptySplit.
SotaCalibration calibrate_sota(std::span<const CalibrationSample> samples,
                               const CalibrationConfig& cfg = {});

struct FdeConfig {
    double threshold = 3.0;  ///< standardized residual limit
    std::size_t max_exclusions = 10;
    std::size_t min_retained = 5;
    /// Residual standardization uses the variance model when set, otherwise
    /// this constant sigma (m).
    std::optional<SotaWeightParams> sota;
    double a_priori_sigma = 1.0;
    double elevation_mask = kDefaultElevationMask;
    SolverConfig solver;

    void validate() const;
};

struct FdeResult {
    SolveReport report;  ///< post_fit_residuals cover every input row
    std::vector<std::size_t> excluded;  ///< input indices, in exclusion order
    std::vector<std::size_t> survivors;
};

/// Iterative residual-test exclusion on equal-weight fixes. Each pass
/// standardizes post-fit residuals by the diagonal of (I-P) S (I-P)^T and
/// drops the largest one above threshold. The final fix uses the variance
/// model on the survivors when configured, equal weights otherwise.
/// `elevations` are required with the variance model. Throws
/// NotEnoughMeasurements when N < min_retained + 1.
FdeResult fde_solve(const Epoch& epoch, const FdeConfig& cfg,
                    std::span<const double> elevations = {}, double accel = 0.0);

}  // namespace snapweight
