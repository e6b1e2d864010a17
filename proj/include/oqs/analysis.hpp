#pragma once

#include <optional>
#include <span>
#include <vector>

namespace oqs {

struct FitResult {
    double alpha = 0.0;
    double alpha_stderr = 0.0;
    double t_min = 0.0, t_max = 0.0;
    std::optional<double> z; // collapse fits only
    double collapse_cost = 0.0;
    bool degenerate = false; // collapse cost flat in z (identical curves)
};

/// Ordinary least squares of log n against log t over [t_min, t_max];
/// alpha = -slope, stderr from the regression residuals. Requires at least
/// 4 in-window points, all with n > 0.
FitResult fit_power_law(std::span<const double> t, std::span<const double> n,
                        double t_min, double t_max);

struct ScalingCurve {
    double n_sites = 0; // system size N
    std::vector<double> t, y;
};

/// Finite-size collapse: rescale every curve to (t N^-z, y t^alpha),
/// interpolate linearly onto the shared abscissa range and score the summed
/// squared deviation from the pointwise mean; grid minimum refined by one
/// local quadratic step per axis.
FitResult collapse_fit(std::span<const ScalingCurve> curves,
                       std::span<const double> alpha_grid,
                       std::span<const double> z_grid);

} // namespace oqs
