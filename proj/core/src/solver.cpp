#include "snapweight/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace snapweight {

void SolverConfig::validate() const {
    if (max_iterations < 1) throw ConfigInvalid("max_iterations", "must be >= 1");
    if (!(step_tolerance > 0.0)) throw ConfigInvalid("step_tolerance", "must be > 0");
    if (!(initial_damping > 0.0)) throw ConfigInvalid("initial_damping", "must be > 0");
    if (!(damping_up > 1.0)) throw ConfigInvalid("damping_up", "must be > 1");
    if (!(damping_down > 1.0)) throw ConfigInvalid("damping_down", "must be > 1");
    if (!(max_condition > 1.0)) throw ConfigInvalid("max_condition", "must be > 1");
}

std::size_t state_dimension(const Epoch& epoch) { return 3 + constellations_in(epoch).size(); }

WeightVector equal_weights(const Epoch& epoch, double w) {
    return WeightVector(epoch.size(), w);
}

namespace {

// Internal parameterization: [x, y, z, c*delta_k ...], all in meters.
struct Problem {
    const Epoch& epoch;
    std::span<const double> weights;
    std::vector<std::size_t> rows;             // active rows, canonical order
    std::vector<Constellation> constellations;  // state clock slots
    std::vector<int> slot;                      // per active row

    std::size_t dim() const { return 3 + constellations.size(); }

    long double residual(const Eigen::VectorXd& p, std::size_t k) const {
        const auto& m = epoch.measurements[rows[k]];
        const long double dx = static_cast<long double>(p[0]) - m.sat_pos.x;
        const long double dy = static_cast<long double>(p[1]) - m.sat_pos.y;
        const long double dz = static_cast<long double>(p[2]) - m.sat_pos.z;
        return static_cast<long double>(m.pseudorange) - std::sqrt(dx * dx + dy * dy + dz * dz) -
               static_cast<long double>(p[3 + slot[k]]);
    }

    double cost(const Eigen::VectorXd& p) const {
        long double acc = 0.0L;
        for (std::size_t k = 0; k < rows.size(); ++k) {
            const long double r = residual(p, k);
            acc += static_cast<long double>(weights[rows[k]]) * r * r;
        }
        return static_cast<double>(acc);
    }

    // Accumulates J^T W J and J^T W r row by row in a fixed order.
    void normal_equations(const Eigen::VectorXd& p, Eigen::MatrixXd& a, Eigen::VectorXd& g) const {
        const std::size_t n = dim();
        a.setZero(n, n);
        g.setZero(n);
        Eigen::VectorXd j(n);
        for (std::size_t k = 0; k < rows.size(); ++k) {
            const auto& m = epoch.measurements[rows[k]];
            const Eigen::Vector3d d = p.head<3>() - m.sat_pos.vec();
            const double range = d.norm();
            if (range == 0.0) throw ZeroRange();
            j.setZero();
            j.head<3>() = d / range;
            j[3 + slot[k]] = 1.0;
            const double w = weights[rows[k]];
            a.noalias() += w * j * j.transpose();
            g.noalias() += (w * static_cast<double>(residual(p, k))) * j;
        }
    }
};

double condition_number(const Eigen::MatrixXd& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

NavState to_state(const Problem& prob, const Eigen::VectorXd& p) {
    NavState s;
    s.position = {p[0], p[1], p[2]};
    for (std::size_t k = 0; k < prob.constellations.size(); ++k)
        s.clock_bias[prob.constellations[k]] = p[3 + k] / kSpeedOfLight;
    return s;
}

SolveReport make_report(const Problem& prob, const Eigen::VectorXd& p, int iterations,
                        bool converged) {
    SolveReport rep;
    rep.state = to_state(prob, p);
    rep.iterations = iterations;
    rep.converged = converged;
    rep.final_cost = prob.cost(p);
    rep.post_fit_residuals.reserve(prob.epoch.size());
    for (const auto& m : prob.epoch.measurements) {
        if (rep.state.clock_bias.contains(m.constellation))
            rep.post_fit_residuals.push_back(residual(rep.state, m));
        else
            rep.post_fit_residuals.push_back(std::numeric_limits<double>::quiet_NaN());
    }
    return rep;
}

}  // namespace

SolveReport solve_wls(const Epoch& epoch, std::span<const double> weights,
                      const std::optional<NavState>& init, const SolverConfig& cfg) {
    cfg.validate();
    if (weights.size() != epoch.size())
        throw ShapeMismatch("weight vector length " + std::to_string(weights.size()) +
                            " does not match " + std::to_string(epoch.size()) + " measurements");
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w))
            throw std::invalid_argument("weights must be finite and non-negative");
    }

    Problem prob{epoch, weights, {}, {}, {}};
    for (std::size_t i = 0; i < epoch.size(); ++i)
        if (weights[i] > 0.0) prob.rows.push_back(i);
    std::stable_sort(prob.rows.begin(), prob.rows.end(), [&](std::size_t a, std::size_t b) {
        return epoch.measurements[a].key() < epoch.measurements[b].key();
    });
    for (std::size_t r : prob.rows) prob.constellations.push_back(epoch.measurements[r].constellation);
    std::sort(prob.constellations.begin(), prob.constellations.end());
    prob.constellations.erase(std::unique(prob.constellations.begin(), prob.constellations.end()),
                              prob.constellations.end());
    for (std::size_t r : prob.rows) {
        const auto c = epoch.measurements[r].constellation;
        prob.slot.push_back(static_cast<int>(
            std::lower_bound(prob.constellations.begin(), prob.constellations.end(), c) -
            prob.constellations.begin()));
    }
    if (prob.rows.size() < prob.dim()) throw NotEnoughMeasurements(prob.rows.size(), prob.dim());

    Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(prob.dim()));
    if (!init) {
        // Surface point under the mean satellite direction, summed in
        // canonical row order so the start does not depend on input order.
        Eigen::Vector3d dir = Eigen::Vector3d::Zero();
        for (std::size_t r : prob.rows) dir += epoch.measurements[r].sat_pos.vec().normalized();
        if (dir.norm() > 1e-6) p.head<3>() = dir.normalized() * wgs84::kSemiMajorAxis;
    } else {
        p.head<3>() = init->position.vec();
        for (std::size_t k = 0; k < prob.constellations.size(); ++k) {
            const auto it = init->clock_bias.find(prob.constellations[k]);
            if (it != init->clock_bias.end()) p[3 + k] = it->second * kSpeedOfLight;
        }
    }

    double lambda = cfg.initial_damping;
    double cost = prob.cost(p);
    Eigen::MatrixXd a;
    Eigen::VectorXd g;
    bool fresh = false;  // whether a/g belong to the current p
    int iter = 0;
    bool converged = false;
    while (iter < cfg.max_iterations) {
        ++iter;
        if (!fresh) {
            prob.normal_equations(p, a, g);
            const double cond = condition_number(a);
            if (cond > cfg.max_condition) throw SingularGeometry(cond);
            fresh = true;
        }
        Eigen::MatrixXd damped = a;
        damped.diagonal() += lambda * a.diagonal();
        // J was built as dh/dp; the residual gradient is its negative, so the
        // Gauss-Newton increment solves (J^T W J) dp = J^T W r.
        const Eigen::VectorXd step = damped.ldlt().solve(g);
        const double step_norm = step.norm();
        const Eigen::VectorXd candidate = p + step;
        const double candidate_cost = prob.cost(candidate);
        if (std::isfinite(candidate_cost) && candidate_cost <= cost) {
            p = candidate;
            cost = candidate_cost;
            lambda = std::max(lambda / cfg.damping_down, 1e-12);
            fresh = false;
            if (step_norm < cfg.step_tolerance) {
                converged = true;
                break;
            }
        } else {
            lambda *= cfg.damping_up;
            if (step_norm < cfg.step_tolerance) {
                // Any descent left is below working precision.
                converged = true;
                break;
            }
        }
    }
    SolveReport rep = make_report(prob, p, iter, converged);
    if (!converged) throw NonConvergence(std::move(rep));
    return rep;
}

Eigen::MatrixXd jacobian(const NavState& state, const Epoch& epoch) {
    const auto cons = constellations_in(epoch);
    for (auto c : cons)
        if (!state.clock_bias.contains(c)) throw MissingClockBias(std::string(to_string(c)));
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(epoch.size()),
                                              static_cast<Eigen::Index>(3 + cons.size()));
    for (std::size_t i = 0; i < epoch.size(); ++i) {
        const auto& m = epoch.measurements[i];
        const Eigen::Vector3d d = state.position.vec() - m.sat_pos.vec();
        const double range = d.norm();
        if (range == 0.0) throw ZeroRange();
        const auto row = static_cast<Eigen::Index>(i);
        h.block<1, 3>(row, 0) = (d / range).transpose();
        const auto col = std::lower_bound(cons.begin(), cons.end(), m.constellation) - cons.begin();
        h(row, 3 + col) = kSpeedOfLight;
    }
    return h;
}

}  // namespace snapweight
