#pragma once

#include <cstddef>
#include <vector>

#include "kinkqte/first_stage.hpp"
#include "kinkqte/kernels.hpp"
#include "kinkqte/types.hpp"

namespace kinkqte {

inline constexpr double kDefaultTolDenominator = 1e-6;

/// Estimated conditional potential-outcome CDF on a y-grid.
/// values_raw holds the plain Wald ratios; values holds the ratios clipped
/// to [0,1] and then rearranged (sorted), a bona fide CDF on the grid.
struct CdfProcess {
    int d = 1;
    std::vector<double> y_grid;
    std::vector<double> values_raw;
    std::vector<double> values;
    std::vector<double> numerator_slopes;   // mu1 slope difference per grid point
    double denominator_slope_diff = 0.0;    // mu2 slope difference (first-stage kink)
};

/// The QTE process tau(theta) = q1(theta) - q0(theta) on a theta-grid,
/// along with the per-arm quantiles and their grid indices.
struct QteProcess {
    std::vector<double> theta_grid;
    std::vector<double> tau;
    std::vector<double> q1, q0;
    std::vector<std::size_t> q1_idx, q0_idx;
    bool grid_too_narrow = false;
};

CdfProcess wald_cdf(const Sample& sample, const std::vector<double>& y_grid, int d, double h,
                    KernelSpec spec, double tol_denominator = kDefaultTolDenominator);

/// Assembly from precomputed first-stage slopes; wald_cdf delegates here.
CdfProcess wald_cdf_from_first_stage(const FirstStageModel& model, int d,
                                     double tol_denominator = kDefaultTolDenominator);

/// Monotone rearrangement on a finite grid: the sorted values.
std::vector<double> rearrange(std::vector<double> values);

struct QuantileInversion {
    double value = 0.0;
    std::size_t index = 0;
    bool at_grid_edge = false;  // no grid point reached the level; last point returned
};

/// Left-continuous inverse: smallest grid point with values >= theta.
QuantileInversion quantile_invert(const CdfProcess& cdf, double theta);

QteProcess qte_process(const CdfProcess& cdf1, const CdfProcess& cdf0,
                       const std::vector<double>& theta_grid);

std::vector<double> make_theta_grid(double a, std::size_t size);

/// Outcome grid: equally spaced points spanning the trim_p and 1-trim_p
/// empirical quantiles of Y among observations with |x/h| <= 1, padded on
/// each end by pad_frac times the spanned range.
std::vector<double> make_y_grid(const Sample& sample, double h, std::size_t size,
                                double trim_p = 0.02, double pad_frac = 0.1);

}  // namespace kinkqte
