#include "snapweight/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>

#include "snapweight/errors.hpp"
#include "snapweight/parallel.hpp"
#include "snapweight/rng.hpp"

namespace snapweight {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kSiderealDay = 86164.0905;

std::string indexed(const std::string& base, std::size_t i, const std::string& leaf) {
    return base + "[" + std::to_string(i) + "]." + leaf;
}

}  // namespace

ConstellationSpec ConstellationSpec::gps() {
    return {Constellation::Gps, 24, 6, 26'560'000.0, 55.0 * kDeg, {Band::L1}};
}
ConstellationSpec ConstellationSpec::glonass() {
    return {Constellation::Glonass, 24, 3, 25'510'000.0, 64.8 * kDeg, {Band::L1}};
}
ConstellationSpec ConstellationSpec::galileo() {
    return {Constellation::Galileo, 24, 3, 29'600'000.0, 56.0 * kDeg, {Band::L1}};
}
ConstellationSpec ConstellationSpec::beidou() {
    return {Constellation::Beidou, 24, 3, 27'900'000.0, 55.0 * kDeg, {Band::L1}};
}

ScenarioConfig ScenarioConfig::for_environment(Environment e) {
    ScenarioConfig c;
    c.profile = e;
    switch (e) {
        case Environment::UrbanCanyon:
            c.nlos_curve = {{5 * kDeg, 0.7}, {30 * kDeg, 0.35}, {60 * kDeg, 0.1}, {90 * kDeg, 0.05}};
            c.nlos_bias_mean = 30.0;
            c.speed_mean = 8.0;
            c.speed_amplitude = 4.0;
            c.origin = {48.8566 * kDeg, 2.3522 * kDeg, 40.0};
            break;
        case Environment::Suburban:
            c.nlos_curve = {{5 * kDeg, 0.3}, {30 * kDeg, 0.1}, {90 * kDeg, 0.02}};
            c.nlos_bias_mean = 20.0;
            c.speed_mean = 12.0;
            c.speed_amplitude = 5.0;
            c.origin = {45.19 * kDeg, 5.72 * kDeg, 220.0};
            break;
        case Environment::OpenSky:
            c.nlos_curve = {{5 * kDeg, 0.05}, {30 * kDeg, 0.0}, {90 * kDeg, 0.0}};
            c.nlos_bias_mean = 10.0;
            c.speed_mean = 20.0;
            c.speed_amplitude = 5.0;
            c.origin = {44.0 * kDeg, 4.0 * kDeg, 100.0};
            break;
    }
    return c;
}

void ScenarioConfig::validate() const {
    if (!(duration > 0.0)) throw ConfigInvalid("duration", "must be > 0");
    if (!(rate > 0.0)) throw ConfigInvalid("rate", "must be > 0");
    if (constellations.empty()) throw ConfigInvalid("constellations", "must not be empty");
    std::set<Constellation> seen;
    for (std::size_t i = 0; i < constellations.size(); ++i) {
        const auto& c = constellations[i];
        if (!seen.insert(c.constellation).second)
            throw ConfigInvalid(indexed("constellations", i, "name"), "duplicate constellation");
        if (c.sv_count < 1 || c.sv_count > 63)
            throw ConfigInvalid(indexed("constellations", i, "sv_count"), "must be in [1, 63]");
        if (c.planes < 1 || c.planes > c.sv_count)
            throw ConfigInvalid(indexed("constellations", i, "planes"), "must be in [1, sv_count]");
        if (!(c.radius > 1e7 && c.radius < 5e7))
            throw ConfigInvalid(indexed("constellations", i, "radius"), "must be in (1e7, 5e7) m");
        if (!(c.inclination >= 0.0 && c.inclination <= std::numbers::pi))
            throw ConfigInvalid(indexed("constellations", i, "inclination"), "must be in [0, 180] deg");
        if (c.bands.empty())
            throw ConfigInvalid(indexed("constellations", i, "bands"), "must not be empty");
        if (std::set<Band>(c.bands.begin(), c.bands.end()).size() != c.bands.size())
            throw ConfigInvalid(indexed("constellations", i, "bands"), "duplicate band");
    }
    if (!(elevation_mask >= 0.0 && elevation_mask < std::numbers::pi / 2))
        throw ConfigInvalid("elevation_mask", "must be in [0, 90) deg");
    if (!(noise_sigma >= 0.0)) throw ConfigInvalid("noise_sigma", "must be >= 0");
    if (!(noise_model.zenith >= 0.0)) throw ConfigInvalid("noise_model.zenith", "must be >= 0");
    if (!(noise_model.cn0 >= 0.0)) throw ConfigInvalid("noise_model.cn0", "must be >= 0");
    if (!(noise_model.accel >= 0.0)) throw ConfigInvalid("noise_model.accel", "must be >= 0");
    if (nlos_curve.empty()) throw ConfigInvalid("nlos_curve", "must not be empty");
    for (std::size_t i = 0; i < nlos_curve.size(); ++i) {
        const auto& p = nlos_curve[i];
        if (!(p.probability >= 0.0 && p.probability <= 1.0))
            throw ConfigInvalid(indexed("nlos_curve", i, "probability"), "must be in [0, 1]");
        if (!(p.elevation >= 0.0 && p.elevation <= std::numbers::pi / 2))
            throw ConfigInvalid(indexed("nlos_curve", i, "elevation"), "must be in [0, 90] deg");
        if (i > 0 && !(p.elevation > nlos_curve[i - 1].elevation))
            throw ConfigInvalid(indexed("nlos_curve", i, "elevation"), "must be increasing");
    }
    if (!(nlos_bias_mean >= 0.0)) throw ConfigInvalid("nlos_bias_mean", "must be >= 0");
    if (!(nlos_dwell > 0.0)) throw ConfigInvalid("nlos_dwell", "must be > 0");
    if (!(nlos_cn0_penalty_sd >= 0.0)) throw ConfigInvalid("nlos_cn0_penalty_sd", "must be >= 0");
    if (!(multipath_cn0_var >= 0.0)) throw ConfigInvalid("multipath_cn0_var", "must be >= 0");
    if (!(multipath_noise_scale >= 0.0))
        throw ConfigInvalid("multipath_noise_scale", "must be >= 0");
    if (!(cn0_zenith > 0.0 && cn0_zenith <= 60.0)) throw ConfigInvalid("cn0_zenith", "must be in (0, 60]");
    if (!(cn0_elevation_drop >= 0.0)) throw ConfigInvalid("cn0_elevation_drop", "must be >= 0");
    if (!(cn0_noise >= 0.0)) throw ConfigInvalid("cn0_noise", "must be >= 0");
    if (!(cycle_slip_at_onset >= 0.0 && cycle_slip_at_onset <= 1.0))
        throw ConfigInvalid("cycle_slip_at_onset", "must be in [0, 1]");
    if (!(dropout_probability >= 0.0 && dropout_probability <= 1.0))
        throw ConfigInvalid("dropout_probability", "must be in [0, 1]");
    if (!(clock_offset_max >= 0.0 && clock_offset_max < 0.01))
        throw ConfigInvalid("clock_offset_max", "must be in [0, 0.01) s");
    if (!(clock_walk >= 0.0)) throw ConfigInvalid("clock_walk", "must be >= 0");
    if (!(std::abs(origin.latitude) <= std::numbers::pi / 2))
        throw ConfigInvalid("origin.latitude", "must be in [-90, 90] deg");
    if (!(std::abs(origin.height) < 1e4)) throw ConfigInvalid("origin.height", "must be within 10 km");
    if (waypoints.size() == 1) throw ConfigInvalid("waypoints", "need at least two points");
    if (!(speed_mean >= 0.0)) throw ConfigInvalid("speed_mean", "must be >= 0");
    if (!(speed_amplitude >= 0.0 && speed_amplitude <= speed_mean))
        throw ConfigInvalid("speed_amplitude", "must be in [0, speed_mean]");
    if (!(speed_period > 0.0)) throw ConfigInvalid("speed_period", "must be > 0");
    if (!(turn_rate_max >= 0.0)) throw ConfigInvalid("turn_rate_max", "must be >= 0");
}

std::size_t ScenarioConfig::epoch_count() const {
    return static_cast<std::size_t>(std::floor(duration * rate + 1e-9));
}

double nlos_probability(const std::vector<NlosCurvePoint>& curve, double elevation) {
    if (curve.empty()) return 0.0;
    if (elevation <= curve.front().elevation) return curve.front().probability;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        if (elevation <= curve[i].elevation) {
            const auto& a = curve[i - 1];
            const auto& b = curve[i];
            const double f = (elevation - a.elevation) / (b.elevation - a.elevation);
            return a.probability + f * (b.probability - a.probability);
        }
    }
    return curve.back().probability;
}

namespace {

struct Kinematics {
    Eigen::Vector3d position;      // ENU at origin
    Eigen::Vector3d velocity;
    Eigen::Vector3d acceleration;
};

// Vehicle motion in the tangent plane at the origin.
class Trajectory {
public:
    Trajectory(const ScenarioConfig& cfg, Rng& rng) : cfg_(cfg) {
        heading0_ = rng.uniform(0.0, 2.0 * std::numbers::pi);
        speed_phase_ = rng.uniform(0.0, 2.0 * std::numbers::pi);
        turn_phase_ = rng.uniform(0.0, 2.0 * std::numbers::pi);
        turn_period_ = rng.uniform(60.0, 200.0);
        for (const auto& w : cfg.waypoints) route_.push_back(ecef_to_enu(geodetic_to_ecef(w), cfg.origin).vec());
    }

    double speed(double t) const {
        return cfg_.speed_mean +
               cfg_.speed_amplitude * std::sin(2.0 * std::numbers::pi * t / cfg_.speed_period + speed_phase_);
    }
    double speed_rate(double t) const {
        const double w = 2.0 * std::numbers::pi / cfg_.speed_period;
        return cfg_.speed_amplitude * w * std::cos(w * t + speed_phase_);
    }
    double turn_rate(double t) const {
        return cfg_.turn_rate_max * std::sin(2.0 * std::numbers::pi * t / turn_period_ + turn_phase_);
    }

    // Integrates from the last evaluated time; calls must be time-ordered.
    Kinematics at(double t) {
        constexpr int kSub = 20;
        const double h = (t - t_) / kSub;
        for (int k = 0; k < kSub && h > 0.0; ++k) {
            const double tm = t_ + (k + 0.5) * h;
            const double v = speed(tm);
            distance_ += v * h;
            if (route_.empty()) {
                heading_ += turn_rate(tm) * h;
                pos_ += v * h * Eigen::Vector3d(std::sin(heading0_ + heading_), std::cos(heading0_ + heading_), 0.0);
            }
        }
        t_ = t;
        const double v = speed(t);
        const double dv = speed_rate(t);
        Kinematics k;
        if (route_.empty()) {
            const double psi = heading0_ + heading_;
            const Eigen::Vector3d fwd(std::sin(psi), std::cos(psi), 0.0);
            const Eigen::Vector3d left(-std::cos(psi), std::sin(psi), 0.0);
            k.position = pos_;
            k.velocity = v * fwd;
            // Positive turn rate turns clockwise (towards east from north).
            k.acceleration = dv * fwd - v * turn_rate(t) * left;
        } else {
            std::size_t seg = 0;
            double s = distance_;
            while (seg + 1 < route_.size() - 1 && s > (route_[seg + 1] - route_[seg]).norm()) {
                s -= (route_[seg + 1] - route_[seg]).norm();
                ++seg;
            }
            const Eigen::Vector3d d = route_[seg + 1] - route_[seg];
            const double len = d.norm();
            const Eigen::Vector3d fwd = len > 0.0 ? Eigen::Vector3d(d / len) : Eigen::Vector3d::Zero();
            const bool done = s >= len;
            k.position = route_[seg] + std::min(s, len) * fwd;
            k.velocity = done ? Eigen::Vector3d::Zero() : Eigen::Vector3d(v * fwd);
            k.acceleration = done ? Eigen::Vector3d::Zero() : Eigen::Vector3d(dv * fwd);
        }
        return k;
    }

private:
    const ScenarioConfig& cfg_;
    std::vector<Eigen::Vector3d> route_;
    double heading0_ = 0.0, speed_phase_ = 0.0, turn_phase_ = 0.0, turn_period_ = 100.0;
    double t_ = 0.0, heading_ = 0.0, distance_ = 0.0;
    Eigen::Vector3d pos_ = Eigen::Vector3d::Zero();
};

Eigen::Vector3d satellite_ecef(const ConstellationSpec& c, int index, double t_abs) {
    const int per_plane = (c.sv_count + c.planes - 1) / c.planes;
    const int plane = index % c.planes;
    const int slot = index / c.planes;
    // Walker phasing with F = 1 plus a per-constellation offset.
    const double offset = 0.37 * static_cast<double>(static_cast<int>(c.constellation) + 1);
    const double raan = 2.0 * std::numbers::pi * plane / c.planes + offset;
    const double mean_motion = std::sqrt(kEarthGm / (c.radius * c.radius * c.radius));
    const double u = 2.0 * std::numbers::pi * slot / per_plane +
                     2.0 * std::numbers::pi * plane / c.sv_count + offset + mean_motion * t_abs;
    const double ci = std::cos(c.inclination), si = std::sin(c.inclination);
    const Eigen::Vector3d eci(c.radius * (std::cos(u) * std::cos(raan) - std::sin(u) * ci * std::sin(raan)),
                              c.radius * (std::cos(u) * std::sin(raan) + std::sin(u) * ci * std::cos(raan)),
                              c.radius * std::sin(u) * si);
    const double th = kEarthRotationRate * t_abs;
    return {std::cos(th) * eci.x() + std::sin(th) * eci.y(), -std::sin(th) * eci.x() + std::cos(th) * eci.y(),
            eci.z()};
}

struct SvState {
    bool visible = false;
    bool nlos = false;
    double bias = 0.0;
    double cn0_penalty = 0.0;
};

struct LinkState {
    bool tracked = false;
    double lock = 0.0;
};

}  // namespace

SimSession generate_session(const ScenarioConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    const double dt = 1.0 / cfg.rate;
    const double t_start = rng.uniform(0.0, kSiderealDay);
    Trajectory path(cfg, rng);
    const Eigen::Matrix3d enu_to_ecef_rot = ecef_to_enu_rotation(cfg.origin).transpose();
    const Eigen::Vector3d origin_ecef = geodetic_to_ecef(cfg.origin).vec();

    std::map<Constellation, double> clock;
    for (const auto& c : cfg.constellations)
        clock[c.constellation] = rng.uniform(-cfg.clock_offset_max, cfg.clock_offset_max);

    std::map<std::pair<Constellation, int>, SvState> svs;
    std::map<LinkKey, LinkState> links;

    SimSession out;
    const std::size_t n_epochs = cfg.epoch_count();
    out.epochs.reserve(n_epochs);
    out.truth.epochs.reserve(n_epochs);
    for (std::size_t k = 0; k < n_epochs; ++k) {
        const double t = static_cast<double>(k) * dt;
        if (k > 0)
            for (auto& [c, b] : clock) b += cfg.clock_walk * std::sqrt(dt) * rng.normal();

        const Kinematics kin = path.at(t);
        EpochTruth truth;
        truth.position = EcefPosition::from(origin_ecef + enu_to_ecef_rot * kin.position);
        truth.velocity = enu_to_ecef_rot * kin.velocity;
        truth.acceleration = enu_to_ecef_rot * kin.acceleration;
        truth.clock_bias = clock;
        const double accel = kin.acceleration.norm();
        const GeodeticPosition rx_geo = ecef_to_geodetic(truth.position);
        const NavState truth_state{truth.position, clock};

        Epoch epoch;
        epoch.time = t;
        epoch.truth = truth.position;
        for (const auto& spec : cfg.constellations) {
            for (int j = 0; j < spec.sv_count; ++j) {
                const int sv_id = j + 1;
                const EcefPosition sat = EcefPosition::from(satellite_ecef(spec, j, t_start + t));
                const double el = elevation_azimuth(sat, rx_geo).elevation;
                SvState& sv = svs[{spec.constellation, sv_id}];
                if (!(el > cfg.elevation_mask)) {
                    sv = SvState{};
                    for (Band b : spec.bands) links[{spec.constellation, sv_id, b}] = LinkState{};
                    continue;
                }
                const double p = std::min(nlos_probability(cfg.nlos_curve, el), 0.999);
                bool onset = false;
                if (!sv.visible) {
                    sv.visible = true;
                    sv.nlos = rng.bernoulli(p);
                    onset = sv.nlos;
                } else {
                    const double beta = std::min(1.0, dt / cfg.nlos_dwell);
                    if (sv.nlos) {
                        if (rng.bernoulli(beta)) sv.nlos = false;
                    } else if (rng.bernoulli(std::min(1.0, beta * p / (1.0 - p)))) {
                        sv.nlos = true;
                        onset = true;
                    }
                }
                bool slip = false;
                if (onset) {
                    sv.bias = rng.exponential(cfg.nlos_bias_mean);
                    sv.cn0_penalty = rng.normal(cfg.nlos_cn0_penalty, cfg.nlos_cn0_penalty_sd);
                    slip = rng.bernoulli(cfg.cycle_slip_at_onset);
                }

                for (Band band : spec.bands) {
                    const LinkKey key{spec.constellation, sv_id, band};
                    LinkState& ls = links[key];
                    if (rng.bernoulli(cfg.dropout_probability)) {
                        ls = LinkState{};
                        continue;
                    }
                    ls.lock = (ls.tracked && !slip) ? ls.lock + dt : 0.0;
                    ls.tracked = true;

                    const double sin_el = std::sin(el);
                    const double cn0_expected =
                        std::clamp(cfg.cn0_zenith - cfg.cn0_elevation_drop * (1.0 - sin_el) -
                                       (sv.nlos ? sv.cn0_penalty : 0.0),
                                   0.0, 60.0);
                    const double cn0_sd = std::sqrt(cfg.cn0_noise * cfg.cn0_noise +
                                                    (sv.nlos ? cfg.multipath_cn0_var : 0.0));
                    const double cn0 = std::clamp(cn0_expected + cn0_sd * rng.normal(), 0.0, 60.0);

                    double sigma = cfg.noise_sigma *
                                   std::sqrt(sota_sigma2(el, cn0_expected, accel, cfg.noise_model, 0.0));
                    if (sv.nlos) sigma *= cfg.multipath_noise_scale;
                    const double noise = sigma * rng.normal();
                    const double bias = sv.nlos ? sv.bias : 0.0;

                    PseudorangeMeasurement m;
                    m.constellation = spec.constellation;
                    m.sv_id = sv_id;
                    m.band = band;
                    m.sat_pos = sat;
                    m.cn0 = cn0;
                    m.lock_time = ls.lock;
                    m.pseudorange = observation_function(truth_state, m) + noise + bias;
                    epoch.measurements.push_back(m);
                    truth.links.push_back({key, sv.nlos, bias, noise, sigma, el});
                }
            }
        }
        // Generation order is (constellation spec, sv, band); canonical order
        // may differ when specs are not listed in enum order.
        std::vector<std::size_t> order(epoch.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return epoch.measurements[a].key() < epoch.measurements[b].key();
        });
        Epoch sorted = epoch;
        EpochTruth sorted_truth = truth;
        for (std::size_t i = 0; i < order.size(); ++i) {
            sorted.measurements[i] = epoch.measurements[order[i]];
            sorted_truth.links[i] = truth.links[order[i]];
        }
        out.epochs.push_back(std::move(sorted));
        out.truth.epochs.push_back(std::move(sorted_truth));
    }
    return out;
}

void CampaignConfig::validate() const {
    if (profiles.empty()) throw ConfigInvalid("profiles", "must not be empty");
    std::set<Environment> seen;
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        if (!seen.insert(profiles[i].scenario.profile).second)
            throw ConfigInvalid(indexed("profiles", i, "profile"), "duplicate profile");
        if (profiles[i].sessions < 3)
            throw ConfigInvalid(indexed("profiles", i, "sessions"), "must be >= 3");
        profiles[i].scenario.validate();
    }
    split.validate();
    if (!(origin_jitter >= 0.0 && origin_jitter < 0.2))
        throw ConfigInvalid("origin_jitter", "must be in [0, 0.2) rad");
}

Campaign generate_campaign(const CampaignConfig& cfg) {
    cfg.validate();
    struct Job {
        ScenarioConfig scenario;
        SessionInfo info;
    };
    std::vector<Job> jobs;
    for (std::size_t p = 0; p < cfg.profiles.size(); ++p) {
        const auto& req = cfg.profiles[p];
        const SplitCounts counts = split_counts(req.sessions, cfg.split);
        std::vector<Split> splits;
        splits.insert(splits.end(), counts.validation, Split::Validation);
        splits.insert(splits.end(), counts.test, Split::Test);
        splits.insert(splits.end(), counts.train, Split::Train);
        Rng split_rng(derive_seed(cfg.seed, 0x5717 + p));
        split_rng.shuffle(splits.begin(), splits.end());

        for (std::size_t i = 0; i < req.sessions; ++i) {
            Job job{req.scenario, {}};
            job.info.seed = derive_seed(cfg.seed, jobs.size() + 1);
            char id[64];
            std::snprintf(id, sizeof id, "%s-%03zu", std::string(to_string(req.scenario.profile)).c_str(), i);
            job.info.id = id;
            job.info.profile = req.scenario.profile;
            job.info.split = splits[i];
            job.scenario.seed = job.info.seed;
            if (job.scenario.waypoints.empty() && cfg.origin_jitter > 0.0) {
                Rng jitter(derive_seed(job.info.seed, 0xA11));
                job.scenario.origin.latitude += jitter.uniform(-cfg.origin_jitter, cfg.origin_jitter);
                job.scenario.origin.longitude += jitter.uniform(-cfg.origin_jitter, cfg.origin_jitter);
            }
            jobs.push_back(std::move(job));
        }
    }

    std::vector<SimSession> sessions(jobs.size());
    parallel_for(jobs.size(), cfg.jobs, [&](std::size_t i) { sessions[i] = generate_session(jobs[i].scenario); });

    Campaign out;
    out.dataset.seed = cfg.seed;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        out.dataset.sessions.push_back(jobs[i].info);
        for (auto& e : sessions[i].epochs) out.dataset.epochs.push_back({jobs[i].info.id, std::move(e)});
        out.truth.push_back(std::move(sessions[i].truth));
    }
    return out;
}

}  // namespace snapweight
