#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "snapweight/errors.hpp"
#include "snapweight/model.hpp"

namespace snapweight {

/// Per-measurement weights in 1/m^2, aligned with the epoch's measurement order.
using WeightVector = std::vector<double>;

struct SolverConfig {
    int max_iterations = 50;
    double step_tolerance = 1e-6;  ///< meters, over position and c*clock
    double initial_damping = 1e-3;
    double damping_up = 10.0;
    double damping_down = 10.0;
    double max_condition = 1e12;

    /// Throws ConfigInvalid.
    void validate() const;
};

struct SolveReport {
    NavState state;
    int iterations = 0;
    bool converged = false;
    double final_cost = 0.0;  ///< sum of w * r^2, m^2
    /// Residuals at the returned state for every row, including zero-weight
    /// ones. A row whose constellation has no positive-weight measurement is
    /// unobservable and reports NaN.
    std::vector<double> post_fit_residuals;
};

class NonConvergence : public Error {
public:
    explicit NonConvergence(SolveReport best)
        : Error("solver reached the iteration limit without converging"),
          best_(std::move(best)) {}
    const SolveReport& best() const noexcept { return best_; }

private:
    SolveReport best_;
};

/// 3 + number of constellations in the epoch.
std::size_t state_dimension(const Epoch& epoch);

WeightVector equal_weights(const Epoch& epoch, double w = 1.0);

/// Weighted least-squares fix of one epoch by Levenberg-Marquardt.
///
/// Rows with zero weight drop out of the cost entirely; a constellation seen
/// only on zero-weight rows is left out of the state. Rows are processed in
/// canonical (constellation, sv, band) order regardless of their storage
/// order, so the result does not depend on measurement permutation. Without
/// `init` the iteration starts on the ellipsoid under the mean satellite
/// direction with zero clock biases.
///
/// Throws NotEnoughMeasurements, SingularGeometry, ZeroRange, ShapeMismatch
/// (weight length), std::invalid_argument (negative or non-finite weight) and
/// NonConvergence (carrying the best iterate).
SolveReport solve_wls(const Epoch& epoch, std::span<const double> weights,
                      const std::optional<NavState>& init = std::nullopt,
                      const SolverConfig& cfg = {});

/// d h / d [x, y, z, clock biases...]; clock columns follow constellations_in(epoch)
/// and carry c (m/s). Throws ZeroRange or MissingClockBias.
Eigen::MatrixXd jacobian(const NavState& state, const Epoch& epoch);

}  // namespace snapweight
