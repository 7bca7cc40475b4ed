#include "snapweight/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include <Eigen/Dense>

namespace snapweight {

double sota_sigma2(double elevation, double cn0_dbhz, double accel, const SotaWeightParams& p,
                   double mask) {
    if (!(elevation > mask) || elevation <= 0.0) throw HorizonSingularity(elevation);
    const double s = std::sin(elevation);
    const double cn0_linear = std::pow(10.0, cn0_dbhz / 10.0);
    return (p.zenith + p.cn0 / cn0_linear + p.accel * accel * accel) / (s * s);
}

WeightVector sota_weights(const Epoch& epoch, std::span<const double> elevations, double accel,
                          const SotaWeightParams& p, double mask) {
    if (elevations.size() != epoch.size())
        throw ShapeMismatch("elevation count does not match measurement count");
    WeightVector w(epoch.size());
    for (std::size_t i = 0; i < epoch.size(); ++i)
        w[i] = 1.0 / sota_sigma2(elevations[i], epoch.measurements[i].cn0, accel, p, mask);
    return w;
}

// --- calibration ----------------------------------------------------------

namespace {

struct BinRow {
    double y;
    Eigen::Vector3d x;
    double weight;
};

// Weighted least squares restricted to `cols`; nullopt when a coefficient
// comes out negative.
std::optional<std::pair<Eigen::Vector3d, double>> fit_subset(const std::vector<BinRow>& rows,
                                                             const std::vector<int>& cols) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto k = static_cast<Eigen::Index>(cols.size());
    Eigen::MatrixXd a(n, k);
    Eigen::VectorXd b(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const double sw = std::sqrt(rows[static_cast<std::size_t>(r)].weight);
        for (Eigen::Index c = 0; c < k; ++c) a(r, c) = sw * rows[static_cast<std::size_t>(r)].x[cols[static_cast<std::size_t>(c)]];
        b[r] = sw * rows[static_cast<std::size_t>(r)].y;
    }
    Eigen::VectorXd scale = a.colwise().norm().transpose();
    for (Eigen::Index c = 0; c < k; ++c)
        if (!(scale[c] > 0.0)) return std::nullopt;
    const Eigen::MatrixXd as = a * scale.cwiseInverse().asDiagonal();
    const Eigen::VectorXd sol = as.colPivHouseholderQr().solve(b).cwiseQuotient(scale);
    Eigen::Vector3d coef = Eigen::Vector3d::Zero();
    for (Eigen::Index c = 0; c < k; ++c) {
        if (sol[c] < 0.0) return std::nullopt;
        coef[cols[static_cast<std::size_t>(c)]] = sol[c];
    }
    const double sse = (a * sol - b).squaredNorm();
    return std::make_pair(coef, sse);
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace

SotaCalibration calibrate_sota(std::span<const CalibrationSample> samples,
                               const CalibrationConfig& cfg) {
    if (samples.empty()) throw EmptySplit("calibration samples");

    double max_accel = 0.0;
    for (const auto& s : samples) max_accel = std::max(max_accel, std::abs(s.accel));
    SotaCalibration out;
    out.accel_identified = max_accel > 1e-9;

    using Key = std::tuple<std::size_t, long, std::size_t>;
    std::map<Key, std::vector<const CalibrationSample*>> bins;
    const double span = std::numbers::pi / 2.0 - cfg.mask;
    const std::size_t ne = std::max<std::size_t>(cfg.elevation_bins, 1);
    const std::size_t na = std::max<std::size_t>(cfg.accel_bins, 1);
    for (const auto& s : samples) {
        if (!(s.elevation > cfg.mask) || !std::isfinite(s.error)) continue;
        const auto e = std::min(ne - 1, static_cast<std::size_t>((s.elevation - cfg.mask) / span *
                                                                 static_cast<double>(ne)));
        const auto c = static_cast<long>(std::floor(s.cn0 / cfg.cn0_bin_width));
        const auto a = out.accel_identified
                           ? std::min(na - 1, static_cast<std::size_t>(std::abs(s.accel) / max_accel *
                                                                       static_cast<double>(na)))
                           : std::size_t{0};
        bins[{e, c, a}].push_back(&s);
    }

    std::vector<BinRow> rows;
    for (const auto& [key, members] : bins) {
        if (members.size() < cfg.min_bin_count) continue;
        double limit = std::numeric_limits<double>::infinity();
        if (cfg.outlier_k > 0.0) {
            std::vector<double> mags;
            mags.reserve(members.size());
            for (const auto* s : members) mags.push_back(std::abs(s->error));
            const double robust_sigma = 1.4826 * median_of(std::move(mags));
            if (robust_sigma > 0.0) limit = cfg.outlier_k * robust_sigma;
        }
        double y = 0.0;
        Eigen::Vector3d x = Eigen::Vector3d::Zero();
        std::size_t kept = 0;
        for (const auto* s : members) {
            if (std::abs(s->error) > limit) continue;
            const double sn = std::sin(s->elevation);
            y += sn * sn * s->error * s->error;
            x += Eigen::Vector3d(1.0, std::pow(10.0, -s->cn0 / 10.0), s->accel * s->accel);
            ++kept;
        }
        if (kept == 0) continue;
        const double n = static_cast<double>(kept);
        y /= n;
        x /= n;
        // Bin means of squared errors have spread proportional to their level.
        const double w = y > 0.0 ? n / (y * y) : n;
        rows.push_back({y, x, w});
        out.samples_used += kept;
    }
    out.bins_used = rows.size();
    if (rows.empty()) throw EmptySplit("calibration bins");

    // Exhaustive active-set search: with at most three coefficients every
    // subset can be tried and the best non-negative one kept.
    std::vector<std::vector<int>> subsets = {{0}, {1}, {0, 1}};
    if (out.accel_identified) {
        for (auto s : std::vector<std::vector<int>>{{2}, {0, 2}, {1, 2}, {0, 1, 2}}) subsets.push_back(s);
    }
    double best_sse = std::numeric_limits<double>::infinity();
    Eigen::Vector3d best = Eigen::Vector3d::Zero();
    for (const auto& cols : subsets) {
        if (auto fit = fit_subset(rows, cols); fit && fit->second < best_sse) {
            best_sse = fit->second;
            best = fit->first;
        }
    }
    out.params = {best[0], best[1], out.accel_identified ? best[2] : 0.0};
    return out;
}

// --- fault detection and exclusion ------------------------------------------

void FdeConfig::validate() const {
    if (!(threshold > 0.0)) throw ConfigInvalid("fde.threshold", "must be > 0");
    if (min_retained < 4) throw ConfigInvalid("fde.min_retained", "must be >= 4");
    if (!(a_priori_sigma > 0.0)) throw ConfigInvalid("fde.a_priori_sigma", "must be > 0");
    solver.validate();
}

namespace {

Epoch subset_of(const Epoch& epoch, const std::vector<std::size_t>& keep) {
    Epoch sub;
    sub.time = epoch.time;
    sub.truth = epoch.truth;
    for (std::size_t i : keep) sub.measurements.push_back(epoch.measurements[i]);
    return sub;
}

// Diagonal of the post-fit residual covariance (I - P) S (I - P)^T for an
// equal-weight fix, P = H (H^T H)^-1 H^T, clock columns in meters.
Eigen::VectorXd residual_variances(const Epoch& sub, const NavState& state,
                                   const Eigen::VectorXd& prior_var) {
    const auto cons = constellations_in(sub);
    const auto n = static_cast<Eigen::Index>(sub.size());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(3 + cons.size()));
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& m = sub.measurements[static_cast<std::size_t>(i)];
        const Eigen::Vector3d d = state.position.vec() - m.sat_pos.vec();
        h.block<1, 3>(i, 0) = (d / d.norm()).transpose();
        h(i, 3 + (std::lower_bound(cons.begin(), cons.end(), m.constellation) - cons.begin())) = 1.0;
    }
    const Eigen::MatrixXd p = h * (h.transpose() * h).ldlt().solve(h.transpose());
    const Eigen::MatrixXd q = Eigen::MatrixXd::Identity(n, n) - p;
    return (q * prior_var.asDiagonal() * q.transpose()).diagonal();
}

}  // namespace

FdeResult fde_solve(const Epoch& epoch, const FdeConfig& cfg, std::span<const double> elevations,
                    double accel) {
    cfg.validate();
    if (epoch.size() < cfg.min_retained + 1)
        throw NotEnoughMeasurements(epoch.size(), cfg.min_retained + 1);
    if (cfg.sota && elevations.size() != epoch.size())
        throw ShapeMismatch("variance model needs one elevation per measurement");

    std::vector<double> prior(epoch.size(), cfg.a_priori_sigma * cfg.a_priori_sigma);
    if (cfg.sota)
        for (std::size_t i = 0; i < epoch.size(); ++i)
            prior[i] = sota_sigma2(elevations[i], epoch.measurements[i].cn0, accel, *cfg.sota,
                                   cfg.elevation_mask);

    FdeResult out;
    for (std::size_t i = 0; i < epoch.size(); ++i) out.survivors.push_back(i);
    std::optional<NavState> init;
    for (;;) {
        const Epoch sub = subset_of(epoch, out.survivors);
        const SolveReport rep = solve_wls(sub, equal_weights(sub), init, cfg.solver);
        init = rep.state;
        if (out.excluded.size() >= cfg.max_exclusions) break;
        const std::size_t required = std::max(cfg.min_retained, state_dimension(sub) + 1);
        if (out.survivors.size() <= required) break;

        Eigen::VectorXd var(static_cast<Eigen::Index>(sub.size()));
        for (std::size_t k = 0; k < sub.size(); ++k) var[static_cast<Eigen::Index>(k)] = prior[out.survivors[k]];
        const Eigen::VectorXd rvar = residual_variances(sub, rep.state, var);

        double worst = 0.0;
        std::size_t worst_k = 0;
        for (std::size_t k = 0; k < sub.size(); ++k) {
            const double v = rvar[static_cast<Eigen::Index>(k)];
            if (!(v > 1e-12 * var[static_cast<Eigen::Index>(k)])) continue;  // fully determined row
            const double w = std::abs(rep.post_fit_residuals[k]) / std::sqrt(v);
            if (w > worst) {
                worst = w;
                worst_k = k;
            }
        }
        if (worst <= cfg.threshold) break;
        out.excluded.push_back(out.survivors[worst_k]);
        out.survivors.erase(out.survivors.begin() + static_cast<std::ptrdiff_t>(worst_k));
    }

    const Epoch final_set = subset_of(epoch, out.survivors);
    WeightVector w = equal_weights(final_set);
    if (cfg.sota)
        for (std::size_t k = 0; k < final_set.size(); ++k) w[k] = 1.0 / prior[out.survivors[k]];
    out.report = solve_wls(final_set, w, init, cfg.solver);
    out.report.post_fit_residuals.clear();
    for (const auto& m : epoch.measurements)
        out.report.post_fit_residuals.push_back(out.report.state.clock_bias.contains(m.constellation)
                                                    ? residual(out.report.state, m)
                                                    : std::numeric_limits<double>::quiet_NaN());
    return out;
}

}  // namespace snapweight
