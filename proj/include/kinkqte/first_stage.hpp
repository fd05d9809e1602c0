#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "kinkqte/kernels.hpp"
#include "kinkqte/local_poly.hpp"
#include "kinkqte/types.hpp"

namespace kinkqte {

struct FitTriple {
    double level = 0.0;
    double slope = 0.0;      // per unit x
    double curvature = 0.0;  // per unit x^2
};

/// One-sided quadratic coefficients of the reduced-form regressions at a
/// common bandwidth: mu1(., y, d) fits of 1{Y<=y}1{D=d} over the y-grid and
/// mu2(., d) fits of 1{D=d}, each side. Evaluation extrapolates the
/// quadratic on the matching side and windows with 1{|x/h| <= 1};
/// mu2 evaluations are clipped to [0,1], mu1 evaluations are raw.
struct FirstStageModel {
    std::vector<double> y_grid;
    double bandwidth = 0.0;
    // Indexed [d][side][y_idx] and [d][side]; side 0 = plus, 1 = minus.
    std::array<std::array<std::vector<FitTriple>, 2>, 2> mu1;
    std::array<std::array<FitTriple, 2>, 2> mu2;

    static constexpr std::size_t side_index(Side s) { return s == Side::plus ? 0 : 1; }

    const FitTriple& mu1_fit(std::size_t y_idx, int d, Side side) const {
        return mu1[static_cast<std::size_t>(d)][side_index(side)][y_idx];
    }
    const FitTriple& mu2_fit(int d, Side side) const {
        return mu2[static_cast<std::size_t>(d)][side_index(side)];
    }

    double mu1_value(double x, std::size_t y_idx, int d) const;
    double mu2_value(double x, int d) const;

    /// Slope differences across sides (plus minus minus), entering the Wald
    /// ratios: numerator per y-grid point and the first-stage kink.
    double mu1_slope_diff(std::size_t y_idx, int d) const;
    double mu2_slope_diff(int d) const;

    std::size_t nearest_y_index(double y) const;
};

FirstStageModel fit_first_stage(const Sample& sample, std::vector<double> y_grid, double h,
                                KernelSpec spec);

/// Kernel-weighted root mean squared residual of the joint indicator around
/// the check-model level curve, one side at a time.
double sigma_hat(const Sample& sample, const FirstStageModel& check_model, double y, int d,
                 Side side, double h0, KernelSpec spec);

}  // namespace kinkqte
