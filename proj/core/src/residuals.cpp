#include "snapweight/residuals.hpp"

namespace snapweight {

Epoch without_measurement(const Epoch& epoch, std::size_t n) {
    Epoch sub;
    sub.time = epoch.time;
    sub.truth = epoch.truth;
    sub.measurements.reserve(epoch.size() - 1);
    for (std::size_t i = 0; i < epoch.size(); ++i)
        if (i != n) sub.measurements.push_back(epoch.measurements[i]);
    return sub;
}

ResidualMatrix build_residual_matrix(const Epoch& epoch, const SolverConfig& cfg,
                                     const std::optional<NavState>& all_in_view, double gamma) {
    const std::size_t n = epoch.size();
    const std::size_t need = state_dimension(epoch) + 1;
    if (n < need) throw NotEnoughMeasurements(n, need);

    std::optional<NavState> seed = all_in_view;
    if (!seed) {
        try {
            seed = solve_wls(epoch, equal_weights(epoch), std::nullopt, cfg).state;
        } catch (const NonConvergence& e) {
            seed = e.best().state;
        } catch (const Error&) {
            // Subsets fall back to their own cold start.
        }
    }

    ResidualMatrix out;
    out.gamma = gamma;
    const auto dim = static_cast<Eigen::Index>(n);
    out.values.setConstant(dim, dim, gamma);
    for (std::size_t row = 0; row < n; ++row) {
        const Epoch subset = without_measurement(epoch, row);
        try {
            const SolveReport rep = solve_wls(subset, equal_weights(subset), seed, cfg);
            for (std::size_t i = 0; i < n; ++i) {
                if (i == row) continue;
                out.values(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(i)) =
                    residual(rep.state, epoch.measurements[i]);
            }
        } catch (const Error&) {
            out.failed_rows.push_back(row);
        }
    }
    return out;
}

}  // namespace snapweight
