#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "snapweight/model.hpp"
#include "snapweight/solver.hpp"

namespace snapweight {

/// Marker for deliberately excluded (diagonal) and failed-subset entries, m.
inline constexpr double kResidualSentinel = 1e4;

/// Leave-one-out residuals: row n holds the residuals of every measurement
/// against the fix computed without measurement n; the diagonal holds gamma.
struct ResidualMatrix {
    Eigen::MatrixXd values;
    double gamma = kResidualSentinel;
    /// Rows whose subset solve failed; those rows are filled with gamma.
    std::vector<std::size_t> failed_rows;

    std::size_t size() const { return static_cast<std::size_t>(values.rows()); }
};

/// Copy of the epoch without measurement n.
Epoch without_measurement(const Epoch& epoch, std::size_t n);

/// Builds the N x N matrix from N equal-weight subset solves. `all_in_view`,
/// when given, seeds every subset solve; otherwise one all-in-view solve is
/// run first for that purpose. Throws NotEnoughMeasurements when
/// N < state_dimension + 1.
ResidualMatrix build_residual_matrix(const Epoch& epoch, const SolverConfig& cfg = {},
                                     const std::optional<NavState>& all_in_view = std::nullopt,
                                     double gamma = kResidualSentinel);

}  // namespace snapweight
