#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "kinkqte/kernels.hpp"
#include "kinkqte/types.hpp"

namespace kinkqte {

// Conditional-density floor on the unit-variance outcome scale, quoted at
// the reference sample size and relaxed as n grows (the estimator gains
// precision, so the guard can recede):
//   floor(n) = base * (reference_n / n)^(1/3).
inline constexpr double kDefaultDensityFloor = 0.45;
inline constexpr double kFloorReferenceN = 500.0;

double density_floor_at(double base, std::size_t n);

/// Kernel density estimate of X at the kink, (1/(n c)) sum K(X_i / c).
double kde_at_zero(std::span<const double> x, double c, KernelSpec spec);

/// Conditional outcome density at the kink for arm d: one-sided quadratic
/// slopes (bandwidth a) of the kernel-smoothed indicator (bandwidth b),
/// differenced across sides, divided by the first-stage kink (bandwidth h).
/// The result is floored at density_floor_std / sd(Y).
double conditional_density(const Sample& sample, double y, int d, double a, double b, double h,
                           KernelSpec spec, double density_floor_std = kDefaultDensityFloor,
                           double tol_denominator = 1e-6);

struct DensityEstimates {
    double fx0 = 0.0;
    std::vector<double> y_grid;
    std::array<std::vector<double>, 2> f_cond;          // [d] over y_grid
    std::array<std::vector<std::uint8_t>, 2> floored;   // floor hit flags
    double floor_value = 0.0;                           // in original outcome units
    double bandwidth_a = 0.0, bandwidth_b = 0.0;
};

/// Batch evaluation over a y-grid for both arms; shares the one-sided
/// designs across grid points.
DensityEstimates estimate_densities(const Sample& sample, const std::vector<double>& y_grid,
                                    double fx0, double a, double b, double h, KernelSpec spec,
                                    double density_floor_std = kDefaultDensityFloor,
                                    double tol_denominator = 1e-6);

}  // namespace kinkqte
