#include "snapweight/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "snapweight/errors.hpp"
#include "snapweight/parallel.hpp"

namespace snapweight {

std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::GroundTruth: return "ground_truth";
        case Strategy::FeatureMatrix: return "feature_matrix";
        case Strategy::ResidualMatrix: return "residual_matrix";
        case Strategy::SotaFde: return "sota_fde";
        case Strategy::EqualWeights: return "equal_weights";
    }
    return "?";
}

std::vector<Strategy> all_strategies() {
    return {Strategy::GroundTruth, Strategy::FeatureMatrix, Strategy::ResidualMatrix, Strategy::SotaFde,
            Strategy::EqualWeights};
}

std::optional<Strategy> parse_strategy(std::string_view s) {
    for (auto v : all_strategies())
        if (s == to_string(v)) return v;
    return std::nullopt;
}

PositionError position_errors(const NavState& estimate, const EcefPosition& truth) {
    const Eigen::Vector3d d = estimate.position.vec() - truth.vec();
    const Eigen::Vector3d enu = ecef_to_enu_rotation(ecef_to_geodetic(truth)) * d;
    return {std::hypot(enu.x(), enu.y()), std::abs(enu.z())};
}

double empirical_quantile(std::span<const double> samples, double p) {
    if (samples.empty()) throw EmptySamples();
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile probability outside [0, 1]");
    std::vector<double> v(samples.begin(), samples.end());
    std::sort(v.begin(), v.end());
    const double rank = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = rank - static_cast<double>(lo);
    return v[lo] + frac * (v[hi] - v[lo]);
}

double CdfSummary::failure_rate() const {
    const std::size_t total = count + failures;
    return total ? static_cast<double>(failures) / static_cast<double>(total) : 0.0;
}

CdfSummary summarize(Strategy strategy, std::span<const ErrorRecord> records) {
    CdfSummary s;
    s.strategy = strategy;
    for (const auto& r : records) {
        if (r.strategy != strategy) continue;
        if (r.converged) {
            s.horizontal.push_back(r.h_err);
            s.vertical.push_back(r.v_err);
        } else {
            ++s.failures;
        }
    }
    s.count = s.horizontal.size();
    if (s.count == 0) throw EmptySamples();
    std::sort(s.horizontal.begin(), s.horizontal.end());
    std::sort(s.vertical.begin(), s.vertical.end());
    s.h = {empirical_quantile(s.horizontal, 0.50), empirical_quantile(s.horizontal, 0.68),
           empirical_quantile(s.horizontal, 0.95)};
    s.v = {empirical_quantile(s.vertical, 0.50), empirical_quantile(s.vertical, 0.68),
           empirical_quantile(s.vertical, 0.95)};
    return s;
}

const CdfSummary* ComparisonReport::summary(Strategy s) const {
    for (const auto& c : summaries)
        if (c.strategy == s) return &c;
    return nullptr;
}

namespace {

std::size_t count_min_weight(const WeightVector& w) {
    return static_cast<std::size_t>(std::count_if(w.begin(), w.end(), [](double x) { return x <= kMinWeight; }));
}

}  // namespace

ErrorRecord evaluate_epoch(const ProcessedEpoch& pe, Strategy strategy, const StrategyModels& models) {
    ErrorRecord r;
    r.session_id = pe.session_id;
    r.t = pe.epoch.time;
    r.strategy = strategy;
    r.n_sv = pe.epoch.size();
    r.h_err = r.v_err = std::numeric_limits<double>::quiet_NaN();
    if (!pe.usable() || !pe.epoch.truth) return r;
    try {
        SolveReport rep;
        switch (strategy) {
            case Strategy::GroundTruth: {
                const WeightVector w = ground_truth_weights(pe.epoch, models.label_clock);
                rep = solve_wls(pe.epoch, w, pe.all_in_view, models.solver);
                break;
            }
            case Strategy::FeatureMatrix:
            case Strategy::ResidualMatrix: {
                const auto& pred =
                    strategy == Strategy::FeatureMatrix ? models.feature_matrix : models.residual_matrix;
                if (!pred) throw ConfigInvalid(std::string(to_string(strategy)), "strategy needs a trained model");
                const WeightVector w = pred->weights(raw_feature_rows(pe.residuals, pe.links, pred->feature_set));
                r.n_zero_weight = count_min_weight(w);
                rep = solve_wls(pe.epoch, w, pe.all_in_view, models.solver);
                break;
            }
            case Strategy::SotaFde: {
                const FdeResult f = fde_solve(pe.epoch, models.fde, pe.elevations, pe.accel);
                r.n_zero_weight = f.excluded.size();
                rep = f.report;
                break;
            }
            case Strategy::EqualWeights:
                rep = solve_wls(pe.epoch, equal_weights(pe.epoch), pe.all_in_view, models.solver);
                break;
        }
        const PositionError e = position_errors(rep.state, *pe.epoch.truth);
        r.h_err = e.horizontal;
        r.v_err = e.vertical;
        r.converged = rep.converged && std::isfinite(e.horizontal) && std::isfinite(e.vertical);
    } catch (const ConfigInvalid&) {
        throw;
    } catch (const Error&) {
        r.converged = false;
    }
    if (!r.converged) r.h_err = r.v_err = std::numeric_limits<double>::quiet_NaN();
    return r;
}

ComparisonReport compare_strategies(std::span<const ProcessedEpoch> epochs,
                                    std::span<const Strategy> strategies, const StrategyModels& models,
                                    std::size_t jobs) {
    for (Strategy s : strategies) {
        if (s == Strategy::FeatureMatrix && !models.feature_matrix)
            throw ConfigInvalid("feature_matrix", "strategy needs a trained model");
        if (s == Strategy::ResidualMatrix && !models.residual_matrix)
            throw ConfigInvalid("residual_matrix", "strategy needs a trained model");
    }
    std::vector<const ProcessedEpoch*> labeled;
    for (const auto& pe : epochs)
        if (pe.epoch.truth) labeled.push_back(&pe);

    ComparisonReport out;
    out.strategies.assign(strategies.begin(), strategies.end());
    const std::size_t ns = strategies.size();
    out.records.resize(labeled.size() * ns);
    parallel_for(labeled.size(), jobs, [&](std::size_t i) {
        for (std::size_t j = 0; j < ns; ++j) out.records[i * ns + j] = evaluate_epoch(*labeled[i], strategies[j], models);
    });
    for (Strategy s : strategies) {
        try {
            out.summaries.push_back(summarize(s, out.records));
        } catch (const EmptySamples&) {
            CdfSummary empty;
            empty.strategy = s;
            for (const auto& r : out.records)
                if (r.strategy == s) ++empty.failures;
            out.summaries.push_back(std::move(empty));
        }
    }
    return out;
}

}  // namespace snapweight
