#include "snapweight/pipeline.hpp"

#include <map>

#include "snapweight/errors.hpp"
#include "snapweight/parallel.hpp"

namespace snapweight {

std::vector<double> truth_accelerations(std::span<const EpochRecord* const> session) {
    const std::size_t n = session.size();
    std::vector<double> out(n, 0.0);
    if (n < 3) return out;
    for (std::size_t k = 1; k + 1 < n; ++k) {
        const Epoch& a = session[k - 1]->epoch;
        const Epoch& b = session[k]->epoch;
        const Epoch& c = session[k + 1]->epoch;
        if (!a.truth || !b.truth || !c.truth) continue;
        const double h1 = b.time - a.time;
        const double h2 = c.time - b.time;
        if (!(h1 > 0.0 && h2 > 0.0)) continue;
        // Non-uniform three-point second derivative.
        const Eigen::Vector3d acc =
            2.0 * (h1 * c.truth->vec() - (h1 + h2) * b.truth->vec() + h2 * a.truth->vec()) /
            (h1 * h2 * (h1 + h2));
        out[k] = acc.norm();
    }
    out.front() = out[1];
    out.back() = out[n - 2];
    return out;
}

std::vector<ProcessedEpoch> process_session(std::span<const EpochRecord* const> session,
                                            const PipelineConfig& cfg) {
    TrackingHistory history(cfg.features);
    const std::vector<double> accel = truth_accelerations(session);
    std::vector<ProcessedEpoch> out;
    out.reserve(session.size());
    for (std::size_t k = 0; k < session.size(); ++k) {
        const EpochRecord& rec = *session[k];
        ProcessedEpoch pe;
        pe.session_id = rec.session_id;
        pe.epoch.time = rec.epoch.time;
        pe.epoch.truth = rec.epoch.truth;
        pe.accel = accel[k];
        try {
            const SolveReport full = solve_wls(rec.epoch, equal_weights(rec.epoch), std::nullopt, cfg.solver);
            const GeodeticPosition rx = ecef_to_geodetic(full.state.position);
            for (const auto& m : rec.epoch.measurements) {
                const double el = elevation_azimuth(m.sat_pos, rx).elevation;
                if (el > cfg.elevation_mask) {
                    pe.epoch.measurements.push_back(m);
                    pe.elevations.push_back(el);
                } else {
                    ++pe.masked_out;
                }
            }
            if (pe.epoch.measurements.empty()) throw NotEnoughMeasurements(0, 1);
            pe.all_in_view = pe.masked_out == 0
                                 ? full.state
                                 : solve_wls(pe.epoch, equal_weights(pe.epoch), full.state, cfg.solver).state;
            pe.residuals = build_residual_matrix(pe.epoch, cfg.solver, pe.all_in_view, cfg.gamma);
            pe.links = history.update_and_extract(pe.epoch, ecef_to_geodetic(pe.all_in_view->position));
            if (pe.epoch.truth) pe.labels = make_labels(pe.epoch, cfg.label_clock);
        } catch (const Error& e) {
            pe.failure = e.what();
        }
        out.push_back(std::move(pe));
    }
    return out;
}

std::vector<ProcessedEpoch> process_split(const Dataset& data, Split split, const PipelineConfig& cfg,
                                          std::size_t jobs) {
    const auto infos = data.sessions_in(split);
    std::map<std::string, std::vector<const EpochRecord*>> by_session;
    for (const auto& e : data.epochs) by_session[e.session_id].push_back(&e);
    std::vector<std::vector<ProcessedEpoch>> parts(infos.size());
    parallel_for(infos.size(), jobs, [&](std::size_t i) {
        const auto it = by_session.find(infos[i]->id);
        if (it != by_session.end()) parts[i] = process_session(it->second, cfg);
    });
    std::vector<ProcessedEpoch> out;
    for (auto& p : parts)
        for (auto& e : p) out.push_back(std::move(e));
    return out;
}

std::vector<TrainingSample> make_samples(std::span<const ProcessedEpoch> epochs, FeatureSet set,
                                         std::size_t stride) {
    if (stride < 1) stride = 1;
    std::vector<TrainingSample> out;
    std::string session;
    std::size_t counter = 0;
    for (const auto& pe : epochs) {
        if (!pe.usable() || pe.labels.empty()) continue;
        if (pe.session_id != session) {
            session = pe.session_id;
            counter = 0;
        }
        if (counter++ % stride != 0) continue;
        out.push_back({raw_feature_rows(pe.residuals, pe.links, set, pe.labels), pe.labels});
    }
    return out;
}

std::vector<CalibrationSample> calibration_samples(const Dataset& data, Split split,
                                                   const PipelineConfig& cfg) {
    std::map<std::string, std::vector<const EpochRecord*>> by_session;
    for (const auto& e : data.epochs) by_session[e.session_id].push_back(&e);
    std::vector<CalibrationSample> out;
    for (const SessionInfo* info : data.sessions_in(split)) {
        const auto it = by_session.find(info->id);
        if (it == by_session.end()) continue;
        const std::vector<double> accel = truth_accelerations(it->second);
        for (std::size_t k = 0; k < it->second.size(); ++k) {
            const Epoch& src = it->second[k]->epoch;
            if (!src.truth) continue;
            const GeodeticPosition rx = ecef_to_geodetic(*src.truth);
            Epoch masked;
            masked.time = src.time;
            masked.truth = src.truth;
            std::vector<double> el;
            for (const auto& m : src.measurements) {
                const double e = elevation_azimuth(m.sat_pos, rx).elevation;
                if (e > cfg.elevation_mask) {
                    masked.measurements.push_back(m);
                    el.push_back(e);
                }
            }
            if (masked.measurements.empty()) continue;
            const NavState truth = truth_state(masked, cfg.label_clock);
            for (std::size_t i = 0; i < masked.size(); ++i) {
                const auto& m = masked.measurements[i];
                out.push_back({el[i], m.cn0, accel[k], residual(truth, m)});
            }
        }
    }
    return out;
}

}  // namespace snapweight
