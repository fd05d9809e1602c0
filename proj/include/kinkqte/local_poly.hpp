#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "kinkqte/kernels.hpp"
#include "kinkqte/linalg.hpp"
#include "kinkqte/types.hpp"

namespace kinkqte {

/// One-sided weighted local polynomial fit at x = 0.
/// alpha_hat holds the coefficients in the scaled basis r(x/h); level,
/// slope and curvature are rescaled to per-unit-x quantities, so
/// slope * h == alpha_hat[1] exactly.
struct OneSidedFit {
    Side side = Side::plus;
    int degree = 2;
    double bandwidth = 0.0;
    Vec3 alpha_hat{};    // alpha_hat[2] == 0 for degree-1 fits
    double level = 0.0;
    double slope = 0.0;
    double curvature = 0.0;
    int n_effective = 0;
    double condition = 0.0;
};

/// Weighted one-sided design at bandwidth h, factorable once and reused for
/// many responses (the designs do not depend on the response).
/// Membership is strict-sided: x > 0 (plus) or x < 0 (minus), and only
/// observations with positive kernel weight enter.
class OneSidedDesign {
  public:
    OneSidedDesign(std::span<const double> x, Side side, double h, KernelSpec spec, int degree = 2);

    /// Solve the weighted normal equations for a full-length response vector.
    OneSidedFit solve(std::span<const double> response) const;

    /// Solve against a pre-accumulated right-hand side in the scaled basis,
    /// rhs[j] = sum_i w_i (x_i/h)^j resp_i over the window.
    OneSidedFit solve_rhs(const Vec3& rhs) const;

    const std::vector<int>& window() const { return window_; }
    const std::vector<double>& weights() const { return weight_; }
    const std::vector<double>& scaled_x() const { return scaled_; }
    const Mat3& normal_matrix() const { return design_; }

    /// Row selecting the scaled-basis slope from the normal equations:
    /// e1' M^{-1} with e1 = (0,1,0)'. The fitted slope coefficient is the
    /// dot product of this row with any right-hand side.
    Vec3 slope_selector() const;
    double bandwidth() const { return h_; }
    Side side() const { return side_; }
    int degree() const { return degree_; }
    int n_effective() const { return static_cast<int>(window_.size()); }
    double condition() const { return condition_; }

  private:
    Side side_;
    int degree_;
    double h_;
    Mat3 design_{};
    double condition_ = 0.0;
    std::vector<int> window_;
    std::vector<double> weight_;
    std::vector<double> scaled_;
};

OneSidedFit fit_one_sided(std::span<const double> x, std::span<const double> response, Side side,
                          double h, KernelSpec spec, int degree = 2);

enum class ResponseKind { joint, treatment_only };

/// Indicator responses feeding the one-sided fits:
/// joint gives 1{Y <= y} 1{D = d}; treatment_only gives 1{D = d}.
std::vector<double> indicator_response(std::span<const double> Y, std::span<const std::int8_t> D,
                                       double y, int d, ResponseKind kind);

/// Kernel-smoothed indicator (1/b) K((Y_i - y)/b) 1{D_i = d}.
std::vector<double> smoothed_response(std::span<const double> Y, std::span<const std::int8_t> D,
                                      double y, int d, double b, KernelSpec spec);

}  // namespace kinkqte
