#include "kinkqte/wald_qte.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace kinkqte {

CdfProcess wald_cdf_from_first_stage(const FirstStageModel& model, int d, double tol_denominator) {
    CdfProcess cdf;
    cdf.d = d;
    cdf.y_grid = model.y_grid;
    const std::size_t m = model.y_grid.size();
    cdf.denominator_slope_diff = model.mu2_slope_diff(d);
    if (std::fabs(cdf.denominator_slope_diff) < tol_denominator) {
        throw WeakKink("no identifying first-stage kink for arm d=" + std::to_string(d) +
                           ": |slope difference| = " +
                           std::to_string(std::fabs(cdf.denominator_slope_diff)) + " < tolerance " +
                           std::to_string(tol_denominator),
                       std::fabs(cdf.denominator_slope_diff));
    }
    cdf.numerator_slopes.resize(m);
    cdf.values_raw.resize(m);
    cdf.values.resize(m);
    for (std::size_t g = 0; g < m; ++g) {
        cdf.numerator_slopes[g] = model.mu1_slope_diff(g, d);
        cdf.values_raw[g] = cdf.numerator_slopes[g] / cdf.denominator_slope_diff;
        cdf.values[g] = std::clamp(cdf.values_raw[g], 0.0, 1.0);
    }
    cdf.values = rearrange(std::move(cdf.values));
    return cdf;
}

CdfProcess wald_cdf(const Sample& sample, const std::vector<double>& y_grid, int d, double h,
                    KernelSpec spec, double tol_denominator) {
    if (!std::is_sorted(y_grid.begin(), y_grid.end()) ||
        std::adjacent_find(y_grid.begin(), y_grid.end()) != y_grid.end()) {
        throw InputError("wald_cdf: y grid must be strictly increasing");
    }
    FirstStageModel model = fit_first_stage(sample, y_grid, h, spec);
    return wald_cdf_from_first_stage(model, d, tol_denominator);
}

std::vector<double> rearrange(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    return values;
}

QuantileInversion quantile_invert(const CdfProcess& cdf, double theta) {
    if (!(theta > 0.0 && theta < 1.0)) {
        throw InputError("quantile_invert: theta must lie in (0,1)");
    }
    QuantileInversion out;
    auto it = std::lower_bound(cdf.values.begin(), cdf.values.end(), theta);
    if (it == cdf.values.end()) {
        out.index = cdf.values.size() - 1;
        out.at_grid_edge = true;
    } else {
        out.index = static_cast<std::size_t>(it - cdf.values.begin());
    }
    out.value = cdf.y_grid[out.index];
    return out;
}

QteProcess qte_process(const CdfProcess& cdf1, const CdfProcess& cdf0,
                       const std::vector<double>& theta_grid) {
    if (cdf1.y_grid != cdf0.y_grid) {
        throw InputError("qte_process: the two CDFs must share a y grid");
    }
    QteProcess qte;
    qte.theta_grid = theta_grid;
    const std::size_t m = theta_grid.size();
    qte.tau.resize(m);
    qte.q1.resize(m);
    qte.q0.resize(m);
    qte.q1_idx.resize(m);
    qte.q0_idx.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        QuantileInversion a = quantile_invert(cdf1, theta_grid[j]);
        QuantileInversion b = quantile_invert(cdf0, theta_grid[j]);
        qte.q1[j] = a.value;
        qte.q0[j] = b.value;
        qte.q1_idx[j] = a.index;
        qte.q0_idx[j] = b.index;
        qte.tau[j] = a.value - b.value;
        qte.grid_too_narrow = qte.grid_too_narrow || a.at_grid_edge || b.at_grid_edge;
    }
    return qte;
}

std::vector<double> make_theta_grid(double a, std::size_t size) {
    if (!(a > 0.0 && a < 0.5)) throw InputError("theta grid: a must lie in (0, 0.5)");
    if (size < 2) throw InputError("theta grid: needs at least 2 points");
    std::vector<double> grid(size);
    double step = (1.0 - 2.0 * a) / static_cast<double>(size - 1);
    for (std::size_t j = 0; j < size; ++j) grid[j] = a + step * static_cast<double>(j);
    return grid;
}

namespace {

// Linearly interpolated empirical quantile of a sorted vector.
double sorted_quantile(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw EmptyWindow("quantile of empty set");
    if (sorted.size() == 1) return sorted[0];
    double pos = p * static_cast<double>(sorted.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    if (lo >= sorted.size() - 1) return sorted.back();
    double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

std::vector<double> make_y_grid(const Sample& sample, double h, std::size_t size, double trim_p,
                                double pad_frac) {
    if (!(h > 0.0) || !std::isfinite(h)) throw NonpositiveBandwidth("make_y_grid: bad bandwidth");
    if (size < 2) throw InputError("y grid: needs at least 2 points");
    std::vector<double> in_window;
    in_window.reserve(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) {
        if (std::fabs(sample.x[i] / h) <= 1.0) in_window.push_back(sample.y[i]);
    }
    if (in_window.size() < 2) {
        throw EmptyWindow("y grid: fewer than 2 observations with |x/h| <= 1");
    }
    std::sort(in_window.begin(), in_window.end());
    double lo = sorted_quantile(in_window, trim_p);
    double hi = sorted_quantile(in_window, 1.0 - trim_p);
    double range = hi - lo;
    if (!(range > 0.0)) {
        throw DegenerateX("y grid: outcome has no spread inside the estimation window");
    }
    lo -= pad_frac * range;
    hi += pad_frac * range;
    std::vector<double> grid(size);
    double step = (hi - lo) / static_cast<double>(size - 1);
    for (std::size_t j = 0; j < size; ++j) grid[j] = lo + step * static_cast<double>(j);
    return grid;
}

}  // namespace kinkqte
