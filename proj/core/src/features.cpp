#include "snapweight/features.hpp"

#include "snapweight/errors.hpp"

namespace snapweight {

namespace {
// Slack for floating-point epoch times (0.2 * 2 is not exactly 0.4).
constexpr double kTimeSlack = 1e-6;
}  // namespace

TrackingHistory::TrackingHistory(FeatureConfig cfg) : cfg_(cfg) {
    if (cfg_.window_capacity < 1) throw ConfigInvalid("window_capacity", "must be >= 1");
    if (!(cfg_.continuity_horizon > 0.0))
        throw ConfigInvalid("continuity_horizon", "must be > 0");
}

std::size_t TrackingHistory::window_size(const LinkKey& key) const {
    const auto it = windows_.find(key);
    return it == windows_.end() ? 0 : it->second.entries.size();
}

std::vector<PerLinkFeatures> TrackingHistory::update_and_extract(const Epoch& epoch,
                                                                 const GeodeticPosition& rx_approx) {
    if (last_time_ && epoch.time < *last_time_) throw NonMonotonicTime(*last_time_, epoch.time);
    last_time_ = epoch.time;

    // Links unseen for longer than the horizon would restart anyway.
    std::erase_if(windows_, [&](const auto& kv) {
        return kv.second.entries.empty() ||
               epoch.time - kv.second.entries.back().time > cfg_.continuity_horizon + kTimeSlack;
    });

    std::vector<PerLinkFeatures> out;
    out.reserve(epoch.size());
    for (const auto& m : epoch.measurements) {
        auto& win = windows_[m.key()].entries;
        win.push_back({epoch.time, m.cn0});
        while (win.size() > cfg_.window_capacity) win.pop_front();

        PerLinkFeatures f;
        f.elevation = elevation_azimuth(m.sat_pos, rx_approx).elevation;
        f.lock_time = m.lock_time;
        f.cn0 = m.cn0;
        f.window_size = static_cast<int>(win.size());

        double sum = 0.0;
        for (const auto& e : win) sum += e.cn0;
        f.cn0_mean = sum / static_cast<double>(win.size());
        if (win.size() < 2) {
            f.cn0_var = cfg_.variance_sentinel;
        } else {
            double ss = 0.0;
            for (const auto& e : win) ss += (e.cn0 - f.cn0_mean) * (e.cn0 - f.cn0_mean);
            f.cn0_var = ss / static_cast<double>(win.size() - 1);
        }
        out.push_back(f);
    }
    return out;
}

}  // namespace snapweight
