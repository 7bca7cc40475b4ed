#pragma once

#include <cstddef>
#include <deque>
#include <map>
#include <optional>
#include <vector>

#include "snapweight/geo.hpp"
#include "snapweight/model.hpp"

namespace snapweight {

struct FeatureConfig {
    std::size_t window_capacity = 10;  // 2 s at 5 Hz
    /// A link's window restarts when it was last seen more than this long ago.
    double continuity_horizon = 0.4;
    /// Variance reported for single-entry windows, (dB-Hz)^2.
    double variance_sentinel = 1e4;
};

struct PerLinkFeatures {
    double elevation = 0.0;  // rad
    double lock_time = 0.0;  // s
    double cn0 = 0.0;        // dB-Hz
    double cn0_mean = 0.0;
    double cn0_var = 0.0;
    int window_size = 0;
};

/// Sliding C/N0 windows for every (constellation, sv, band) link of one
/// navigation session. Not thread-safe; one instance per session.
class TrackingHistory {
public:
    explicit TrackingHistory(FeatureConfig cfg = {});

    /// Pushes the epoch's C/N0 values and returns the features of each
    /// measurement, in the epoch's measurement order. Throws NonMonotonicTime.
    std::vector<PerLinkFeatures> update_and_extract(const Epoch& epoch,
                                                    const GeodeticPosition& rx_approx);

    /// Current number of window entries for a link (0 when untracked).
    std::size_t window_size(const LinkKey& key) const;

    const FeatureConfig& config() const { return cfg_; }

private:
    struct Entry {
        double time;
        double cn0;
    };
    struct Window {
        std::deque<Entry> entries;
    };

    FeatureConfig cfg_;
    std::map<LinkKey, Window> windows_;
    std::optional<double> last_time_;
};

}  // namespace snapweight
