#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "snapweight/baselines.hpp"
#include "snapweight/dataset.hpp"
#include "snapweight/eval.hpp"
#include "snapweight/pipeline.hpp"
#include "snapweight/sim.hpp"
#include "snapweight/training.hpp"

namespace snapweight {

inline constexpr int kDatasetVersion = 1;
inline constexpr int kCheckpointVersion = 1;
inline constexpr int kConfigVersion = 1;
inline constexpr int kFeatureCacheVersion = 1;

/// printf("%.17g"): round-trips every finite double.
std::string format_double(double v);

// --- dataset files -----------------------------------------------------------
//
// Line 1: {"format":"snapweight-dataset","version":1,"seed":S,"sessions":[...]}
// Then one epoch per line, grouped by session:
// {"session_id":..,"t":..,"truth":{"x":..,"y":..,"z":..},"measurements":[
//   {"const":"GPS","sv":3,"band":"L1","pr_m":..,"cn0_dbhz":..,"lock_s":..,
//    "sat_xyz_m":[x,y,z]}, ...]}
// "truth" is omitted for unlabeled epochs.

struct DatasetHeader {
    std::uint64_t seed = 0;
    std::vector<SessionInfo> sessions;
};

std::string serialize_header(const DatasetHeader& h);
std::string serialize_epoch(const EpochRecord& rec);

/// Streams epochs one line at a time; memory use does not grow with the file.
class DatasetReader {
public:
    /// Reads and validates the header. Throws IoError, ParseError,
    /// VersionMismatch.
    explicit DatasetReader(const std::filesystem::path& path);

    const DatasetHeader& header() const { return header_; }
    /// False at end of file. Throws ParseError on malformed or invalid lines.
    bool next(EpochRecord& out);
    std::size_t line() const { return line_; }

private:
    std::ifstream in_;
    DatasetHeader header_;
    std::size_t line_ = 0;
    std::vector<std::string> order_;           // sessions in first-seen order
    std::optional<std::string> current_session_;
    double last_time_ = 0.0;
};

/// Parses one epoch line; `line_no` is used in error positions.
EpochRecord parse_epoch_line(std::string_view line, std::size_t line_no,
                             const DatasetHeader& header);

Dataset read_dataset(const std::filesystem::path& path);
/// Byte-identical output for identical datasets. Throws IoError.
void write_dataset(const Dataset& data, const std::filesystem::path& path);

// --- checkpoints -------------------------------------------------------------

struct Checkpoint {
    TrainResult result;
    TrainConfig config;
    PipelineConfig pipeline;
    std::uint64_t dataset_seed = 0;
};

/// JSON container with every tensor, the normalizer, configuration and the
/// optimizer state needed to resume. Doubles round-trip exactly.
void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// --- run configuration -------------------------------------------------------

struct RunConfig {
    std::uint64_t seed = 1;
    std::size_t jobs = 1;
    CampaignConfig simulation;
    PipelineConfig pipeline;
    TrainConfig train;
    std::size_t train_stride = 1;  ///< keep every k-th training epoch
    CalibrationConfig calibration;
    FdeConfig fde;
    std::vector<Strategy> strategies = all_strategies();

    /// Pushes seed and jobs into the nested configs and validates them all.
    /// Throws ConfigInvalid with a dotted field path.
    void finalize();
};

/// Unknown fields and out-of-range values throw ConfigInvalid naming the
/// field, e.g. "simulation.profiles[0].nlos_curve[1].probability".
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);
/// Fully expanded configuration, re-readable by parse_run_config.
std::string dump_run_config(const RunConfig& cfg);

// --- evaluation outputs ------------------------------------------------------

/// Columns: session_id,t,strategy,h_err_m,v_err_m,converged,n_sv,n_zero_weight.
void write_error_csv(const ComparisonReport& report, const std::filesystem::path& path);
void write_summary_json(const ComparisonReport& report, std::uint64_t seed,
                        const std::filesystem::path& path);

struct SummaryRow {
    std::string strategy;
    std::size_t count = 0;
    std::size_t failures = 0;
    double failure_rate = 0.0;
    Quantiles h;
    Quantiles v;
};
std::vector<SummaryRow> read_summary_json(const std::filesystem::path& path);

/// Loss curve as CSV: epoch,train_loss,val_loss.
void write_loss_csv(std::span<const LossPoint> history, const std::filesystem::path& path);

/// One JSON line per processed epoch with the unnormalized full feature rows
/// and labels, after a header naming the columns.
void write_feature_cache(std::span<const ProcessedEpoch> epochs, Split split, std::uint64_t seed,
                         const std::filesystem::path& path, bool append);

}  // namespace snapweight
