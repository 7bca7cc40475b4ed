#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "snapweight/baselines.hpp"
#include "snapweight/dataset.hpp"
#include "snapweight/features.hpp"
#include "snapweight/residuals.hpp"
#include "snapweight/solver.hpp"
#include "snapweight/training.hpp"
#include "snapweight/weighting.hpp"

namespace snapweight {

struct PipelineConfig {
    SolverConfig solver;
    FeatureConfig features;
    double elevation_mask = kDefaultElevationMask;
    double gamma = kResidualSentinel;
    LabelClock label_clock = LabelClock::Median;
};

/// Everything the weighting strategies need for one epoch.
struct ProcessedEpoch {
    std::string session_id;
    /// Measurements above the elevation mask, canonical order, truth kept.
    Epoch epoch;
    std::size_t masked_out = 0;
    /// Equal-weight fix of `epoch`; absent when it could not be computed.
    std::optional<NavState> all_in_view;
    std::vector<double> elevations;  ///< at the all-in-view fix
    std::vector<PerLinkFeatures> links;
    ResidualMatrix residuals;
    double accel = 0.0;            ///< |a| from truth, 0 without truth
    std::vector<double> labels;    ///< empty without truth
    std::string failure;           ///< why the epoch is unusable, empty if usable

    bool usable() const { return failure.empty(); }
};

/// |second difference| of consecutive truth positions of one session, with
/// end points copied from their neighbours. Zero where truth is missing or the
/// session has fewer than three epochs.
std::vector<double> truth_accelerations(std::span<const EpochRecord* const> session);

/// Runs one session through the all-in-view fix, elevation mask, residual
/// matrix and tracking-history features, in time order. Epochs that cannot
/// be processed are returned with `failure` set; the session continues.
std::vector<ProcessedEpoch> process_session(std::span<const EpochRecord* const> session,
                                            const PipelineConfig& cfg);

/// All sessions of the given split, sessions processed on up to `jobs`
/// threads and concatenated in dataset order.
std::vector<ProcessedEpoch> process_split(const Dataset& data, Split split, const PipelineConfig& cfg,
                                          std::size_t jobs = 1);

/// Training samples from usable, labeled epochs; `stride` keeps every k-th
/// usable epoch of each session.
std::vector<TrainingSample> make_samples(std::span<const ProcessedEpoch> epochs, FeatureSet set,
                                         std::size_t stride = 1);

/// Per-measurement (elevation, C/N0, |a|, true error) of every labeled epoch
/// in the split. Elevations are taken at the truth position and rows at or
/// below the mask are skipped.
std::vector<CalibrationSample> calibration_samples(const Dataset& data, Split split,
                                                   const PipelineConfig& cfg);

}  // namespace snapweight
