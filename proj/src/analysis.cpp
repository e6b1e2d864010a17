#include "oqs/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace oqs {

FitResult fit_power_law(std::span<const double> t, std::span<const double> n,
                        double t_min, double t_max) {
    if (t.size() != n.size())
        throw std::invalid_argument("fit_power_law: length mismatch");
    if (!(t_min < t_max))
        throw std::invalid_argument("fit_power_law: empty window");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_min || t[i] > t_max) continue;
        if (t[i] <= 0)
            continue; // log t undefined; t=0 never sits in a valid window
        if (n[i] <= 0)
            throw std::invalid_argument("fit_power_law: nonpositive density inside window");
        lx.push_back(std::log(t[i]));
        ly.push_back(std::log(n[i]));
    }
    const std::size_t m = lx.size();
    if (m < 4)
        throw std::invalid_argument("fit_power_law: fewer than 4 points in window");

    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < m; ++i) { sx += lx[i]; sy += ly[i]; }
    const double mx = sx / double(m), my = sy / double(m);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx <= 0)
        throw std::invalid_argument("fit_power_law: degenerate abscissa");
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double rss = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const double r = ly[i] - (slope * lx[i] + intercept);
        rss += r * r;
    }
    FitResult fr;
    fr.alpha = -slope;
    fr.alpha_stderr = m > 2 ? std::sqrt(rss / double(m - 2) / sxx) : 0.0;
    fr.t_min = t_min;
    fr.t_max = t_max;
    return fr;
}

namespace {

// linear interpolation on an increasing abscissa; NaN outside
double interp(std::span<const double> x, std::span<const double> y, double xq) {
    if (xq < x.front() || xq > x.back()) return std::numeric_limits<double>::quiet_NaN();
    const auto it = std::lower_bound(x.begin(), x.end(), xq);
    if (it == x.begin()) return y.front();
    const std::size_t hi = std::size_t(it - x.begin());
    const std::size_t lo = hi - 1;
    const double w = (xq - x[lo]) / (x[hi] - x[lo]);
    return y[lo] * (1 - w) + y[hi] * w;
}

constexpr int kCollapsePoints = 64;

double collapse_cost_at(std::span<const ScalingCurve> curves, double alpha, double z) {
    // rescale and find the overlapping abscissa range
    std::vector<std::vector<double>> us(curves.size()), ys(curves.size());
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < curves.size(); ++c) {
        const double nz = std::pow(curves[c].n_sites, -z);
        for (std::size_t i = 0; i < curves[c].t.size(); ++i) {
            const double t = curves[c].t[i];
            if (t <= 0) continue;
            us[c].push_back(t * nz);
            ys[c].push_back(curves[c].y[i] * std::pow(t, alpha));
        }
        if (us[c].size() < 2) return std::numeric_limits<double>::infinity();
        lo = std::max(lo, us[c].front());
        hi = std::min(hi, us[c].back());
    }
    if (!(lo < hi)) return std::numeric_limits<double>::infinity();

    double cost = 0.0;
    for (int p = 0; p < kCollapsePoints; ++p) {
        const double u = lo + (hi - lo) * (p + 0.5) / kCollapsePoints;
        double mean = 0.0;
        std::vector<double> vals(curves.size());
        for (std::size_t c = 0; c < curves.size(); ++c) {
            vals[c] = interp(us[c], ys[c], u);
            mean += vals[c];
        }
        mean /= double(curves.size());
        for (double v : vals) cost += (v - mean) * (v - mean);
    }
    return cost;
}

// one quadratic refinement step along a grid axis; returns the parabola
// vertex clamped to the neighbouring cells
double refine_axis(double c_lo, double c_mid, double c_hi, double x_lo, double x_mid,
                   double x_hi) {
    const double denom = c_lo - 2 * c_mid + c_hi;
    if (denom <= 0) return x_mid;
    const double shift = 0.5 * (c_lo - c_hi) / denom;
    const double h = 0.5 * (x_hi - x_lo);
    return std::clamp(x_mid + shift * h, x_lo, x_hi);
}

} // namespace

FitResult collapse_fit(std::span<const ScalingCurve> curves,
                       std::span<const double> alpha_grid,
                       std::span<const double> z_grid) {
    if (curves.size() < 2)
        throw std::invalid_argument("collapse_fit: at least 2 system sizes required");
    if (alpha_grid.empty() || z_grid.empty())
        throw std::invalid_argument("collapse_fit: empty grid");

    std::vector<std::vector<double>> cost(alpha_grid.size(),
                                          std::vector<double>(z_grid.size(), 0.0));
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < alpha_grid.size(); ++i)
        for (std::size_t j = 0; j < z_grid.size(); ++j) {
            cost[i][j] = collapse_cost_at(curves, alpha_grid[i], z_grid[j]);
            if (cost[i][j] < best) { best = cost[i][j]; bi = i; bj = j; }
        }
    if (!std::isfinite(best))
        throw std::invalid_argument("collapse_fit: no overlapping rescaled range");

    FitResult fr;
    fr.alpha = alpha_grid[bi];
    fr.z = z_grid[bj];
    fr.collapse_cost = best;
    fr.t_min = 0;
    fr.t_max = 0;

    if (bi > 0 && bi + 1 < alpha_grid.size() && std::isfinite(cost[bi - 1][bj]) &&
        std::isfinite(cost[bi + 1][bj]))
        fr.alpha = refine_axis(cost[bi - 1][bj], cost[bi][bj], cost[bi + 1][bj],
                               alpha_grid[bi - 1], alpha_grid[bi], alpha_grid[bi + 1]);
    if (bj > 0 && bj + 1 < z_grid.size() && std::isfinite(cost[bi][bj - 1]) &&
        std::isfinite(cost[bi][bj + 1]))
        fr.z = refine_axis(cost[bi][bj - 1], cost[bi][bj], cost[bi][bj + 1],
                           z_grid[bj - 1], z_grid[bj], z_grid[bj + 1]);

    // identical curves collapse at any z: flag the ambiguity
    const double flat_tol = 1e-12;
    if (best < flat_tol) {
        bool all_flat = true;
        for (std::size_t j = 0; j < z_grid.size() && all_flat; ++j)
            if (!(cost[bi][j] < flat_tol)) all_flat = false;
        fr.degenerate = all_flat;
    }
    // stderr of the grid fit: half a grid cell as the resolution estimate
    fr.alpha_stderr = alpha_grid.size() > 1 ? (alpha_grid[1] - alpha_grid[0]) / 2 : 0.0;
    return fr;
}

} // namespace oqs
