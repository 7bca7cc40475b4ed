#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <numbers>
#include <vector>

#include <Eigen/Core>

#include "snapweight/baselines.hpp"
#include "snapweight/dataset.hpp"
#include "snapweight/geo.hpp"
#include "snapweight/model.hpp"

namespace snapweight {

inline constexpr double kEarthGm = 3.986004418e14;        // m^3/s^2
inline constexpr double kEarthRotationRate = 7.2921151467e-5;  // rad/s

/// Walker-style shell of circular orbits.
struct ConstellationSpec {
    Constellation constellation = Constellation::Gps;
    int sv_count = 24;
    int planes = 6;
    double radius = 26'560'000.0;  ///< m
    double inclination = 55.0 * std::numbers::pi / 180.0;
    std::vector<Band> bands = {Band::L1};

    static ConstellationSpec gps();
    static ConstellationSpec glonass();
    static ConstellationSpec galileo();
    static ConstellationSpec beidou();
};

/// Piecewise-linear stationary NLOS probability versus elevation.
struct NlosCurvePoint {
    double elevation = 0.0;  ///< rad
    double probability = 0.0;
};

struct ScenarioConfig {
    std::uint64_t seed = 1;
    Environment profile = Environment::UrbanCanyon;
    double duration = 200.0;  ///< s
    double rate = 5.0;        ///< Hz
    std::vector<ConstellationSpec> constellations = {ConstellationSpec::gps(),
                                                     ConstellationSpec::galileo()};
    double elevation_mask = kDefaultElevationMask;

    /// Line-of-sight noise follows the parametric variance model with these
    /// coefficients, scaled by noise_sigma^2; noise_sigma = 0 disables it.
    double noise_sigma = 1.0;
    SotaWeightParams noise_model{0.25, 5000.0, 0.05};

    std::vector<NlosCurvePoint> nlos_curve;
    double nlos_bias_mean = 30.0;   ///< m, exponential
    double nlos_dwell = 3.0;        ///< mean NLOS episode length, s
    double nlos_cn0_penalty = 10.0;     ///< dB-Hz, mean
    double nlos_cn0_penalty_sd = 3.0;   ///< dB-Hz
    double multipath_cn0_var = 16.0;    ///< extra C/N0 variance under NLOS, (dB-Hz)^2
    double multipath_noise_scale = 2.0; ///< LOS noise sigma multiplier under NLOS

    double cn0_zenith = 50.0;  ///< dB-Hz
    double cn0_elevation_drop = 15.0;  ///< dB-Hz lost at the horizon, times (1 - sin el)
    double cn0_noise = 1.0;    ///< dB-Hz
    double cycle_slip_at_onset = 0.5;
    double dropout_probability = 0.002;  ///< per link and epoch

    double clock_offset_max = 1e-3;  ///< s, initial |bias| bound
    double clock_walk = 1e-9;        ///< s / sqrt(s)

    GeodeticPosition origin{45.19 * std::numbers::pi / 180.0, 5.72 * std::numbers::pi / 180.0, 220.0};
    /// Optional route in geodetic coordinates; empty means a free drive with
    /// slowly varying heading from `origin`.
    std::vector<GeodeticPosition> waypoints;
    double speed_mean = 10.0;       ///< m/s
    double speed_amplitude = 5.0;   ///< m/s
    double speed_period = 40.0;     ///< s
    double turn_rate_max = 0.1;     ///< rad/s

    /// Profile defaults for everything environment-dependent.
    static ScenarioConfig for_environment(Environment e);
    /// Throws ConfigInvalid naming the offending field.
    void validate() const;
    std::size_t epoch_count() const;
};

/// Stationary NLOS probability at an elevation (clamped at the curve ends).
double nlos_probability(const std::vector<NlosCurvePoint>& curve, double elevation);

struct LinkTruth {
    LinkKey key;
    bool nlos = false;
    double bias = 0.0;   ///< injected NLOS excess path, m
    double noise = 0.0;  ///< Gaussian draw, m
    double sigma = 0.0;  ///< standard deviation of that draw, m
    double elevation = 0.0;
};

struct EpochTruth {
    EcefPosition position;
    Eigen::Vector3d velocity = Eigen::Vector3d::Zero();      ///< ECEF, m/s
    Eigen::Vector3d acceleration = Eigen::Vector3d::Zero();  ///< ECEF, m/s^2
    std::map<Constellation, double> clock_bias;               ///< s
    std::vector<LinkTruth> links;  ///< aligned with the epoch's measurements
};

struct SessionTruth {
    std::vector<EpochTruth> epochs;
};

struct SimSession {
    std::vector<Epoch> epochs;  ///< canonical order, truth attached
    SessionTruth truth;
};

/// Deterministic in cfg.seed. Throws ConfigInvalid.
SimSession generate_session(const ScenarioConfig& cfg);

/// Sessions of one profile; `scenario.seed` is ignored (each session gets a
/// seed derived from the campaign seed).
struct ProfileRequest {
    ScenarioConfig scenario = ScenarioConfig::for_environment(Environment::UrbanCanyon);
    std::size_t sessions = 30;
};

struct CampaignConfig {
    std::uint64_t seed = 1;
    std::vector<ProfileRequest> profiles = {ProfileRequest{}};
    SplitFractions split;
    /// Session origins are spread uniformly within this angle of the
    /// profile origin in latitude and longitude, rad.
    double origin_jitter = 0.5 * std::numbers::pi / 180.0;
    std::size_t jobs = 1;

    void validate() const;
};

struct Campaign {
    Dataset dataset;
    std::vector<SessionTruth> truth;  ///< aligned with dataset.sessions
};

/// Sessions are generated independently (on up to cfg.jobs threads) and
/// assigned to splits per profile by a seeded shuffle. Throws ConfigInvalid.
Campaign generate_campaign(const CampaignConfig& cfg);

}  // namespace snapweight
