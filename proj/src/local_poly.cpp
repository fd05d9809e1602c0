#include "kinkqte/local_poly.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace kinkqte {

namespace {

constexpr double kMaxCondition = 1e12;

void require_bandwidth(double h, const char* what) {
    if (!(h > 0.0) || !std::isfinite(h)) {
        throw NonpositiveBandwidth(std::string(what) + ": bandwidth must be positive, got " +
                                   std::to_string(h));
    }
}

}  // namespace

OneSidedDesign::OneSidedDesign(std::span<const double> x, Side side, double h, KernelSpec spec,
                               int degree)
    : side_(side), degree_(degree), h_(h) {
    require_bandwidth(h, "fit_one_sided");
    if (degree != 1 && degree != 2) {
        throw InputError("fit_one_sided: degree must be 1 or 2");
    }
    const std::size_t n = x.size();
    window_.reserve(64);
    for (std::size_t i = 0; i < n; ++i) {
        double xi = x[i];
        bool on_side = side == Side::plus ? xi > 0.0 : xi < 0.0;
        if (!on_side) continue;
        double u = xi / h;
        if (std::fabs(u) > 1.0) continue;
        double w = eval_kernel(spec, u);
        if (w <= 0.0) continue;
        window_.push_back(static_cast<int>(i));
        weight_.push_back(w);
        scaled_.push_back(u);
    }

    const int p = degree_ + 1;
    int distinct = 0;
    {
        std::vector<double> xs(scaled_);
        std::sort(xs.begin(), xs.end());
        distinct = static_cast<int>(std::unique(xs.begin(), xs.end()) - xs.begin());
    }
    if (distinct < p) {
        throw SingularDesign("one-sided fit (" + std::string(side_name(side)) + "): needs at least " +
                             std::to_string(p) + " distinct in-window x values, found " +
                             std::to_string(distinct));
    }

    // Scaled-basis normal-equation matrix: sum_i w_i u_i^(j+k).
    double s[5] = {0, 0, 0, 0, 0};
    for (std::size_t k = 0; k < window_.size(); ++k) {
        double w = weight_[k];
        double u = scaled_[k];
        double p0 = w;
        s[0] += p0;
        p0 *= u;
        s[1] += p0;
        p0 *= u;
        s[2] += p0;
        if (degree_ == 2) {
            p0 *= u;
            s[3] += p0;
            p0 *= u;
            s[4] += p0;
        }
    }
    for (int j = 0; j < p; ++j)
        for (int k = 0; k < p; ++k) design_[j][k] = s[j + k];
    if (degree_ == 1) design_[2][2] = 1.0;  // inert padding for the 3x3 layout

    condition_ = degree_ == 2 ? condition_sym3(design_)
                              : condition_sym2(Mat2{{{design_[0][0], design_[0][1]},
                                                     {design_[1][0], design_[1][1]}}});
    if (!(condition_ < kMaxCondition)) {
        throw SingularDesign("one-sided fit (" + std::string(side_name(side)) +
                             "): design condition number " + std::to_string(condition_) +
                             " exceeds 1e12");
    }
}

Vec3 OneSidedDesign::slope_selector() const {
    if (degree_ == 2) {
        return solve3(design_, Vec3{0.0, 1.0, 0.0});
    }
    Vec2 z = solve2(Mat2{{{design_[0][0], design_[0][1]}, {design_[1][0], design_[1][1]}}},
                    Vec2{0.0, 1.0});
    return Vec3{z[0], z[1], 0.0};
}

OneSidedFit OneSidedDesign::solve_rhs(const Vec3& rhs) const {
    OneSidedFit fit;
    fit.side = side_;
    fit.degree = degree_;
    fit.bandwidth = h_;
    fit.n_effective = n_effective();
    fit.condition = condition_;
    if (degree_ == 2) {
        fit.alpha_hat = solve3(design_, rhs);
    } else {
        Vec2 a = solve2(Mat2{{{design_[0][0], design_[0][1]}, {design_[1][0], design_[1][1]}}},
                        Vec2{rhs[0], rhs[1]});
        fit.alpha_hat = Vec3{a[0], a[1], 0.0};
    }
    fit.level = fit.alpha_hat[0];
    fit.slope = fit.alpha_hat[1] / h_;
    fit.curvature = degree_ == 2 ? 2.0 * fit.alpha_hat[2] / (h_ * h_) : 0.0;
    return fit;
}

OneSidedFit OneSidedDesign::solve(std::span<const double> response) const {
    Vec3 rhs{0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < window_.size(); ++k) {
        double wr = weight_[k] * response[static_cast<std::size_t>(window_[k])];
        double u = scaled_[k];
        rhs[0] += wr;
        rhs[1] += wr * u;
        rhs[2] += wr * u * u;
    }
    return solve_rhs(rhs);
}

OneSidedFit fit_one_sided(std::span<const double> x, std::span<const double> response, Side side,
                          double h, KernelSpec spec, int degree) {
    if (x.size() != response.size()) {
        throw LengthMismatch("fit_one_sided: x and response lengths differ");
    }
    OneSidedDesign design(x, side, h, spec, degree);
    return design.solve(response);
}

std::vector<double> indicator_response(std::span<const double> Y, std::span<const std::int8_t> D,
                                       double y, int d, ResponseKind kind) {
    if (Y.size() != D.size()) {
        throw LengthMismatch("indicator_response: Y and D lengths differ");
    }
    std::vector<double> out(Y.size());
    const std::int8_t dd = static_cast<std::int8_t>(d);
    for (std::size_t i = 0; i < Y.size(); ++i) {
        bool treat = D[i] == dd;
        out[i] = kind == ResponseKind::treatment_only ? (treat ? 1.0 : 0.0)
                                                      : ((treat && Y[i] <= y) ? 1.0 : 0.0);
    }
    return out;
}

std::vector<double> smoothed_response(std::span<const double> Y, std::span<const std::int8_t> D,
                                      double y, int d, double b, KernelSpec spec) {
    if (Y.size() != D.size()) {
        throw LengthMismatch("smoothed_response: Y and D lengths differ");
    }
    require_bandwidth(b, "smoothed_response");
    std::vector<double> out(Y.size(), 0.0);
    const std::int8_t dd = static_cast<std::int8_t>(d);
    for (std::size_t i = 0; i < Y.size(); ++i) {
        if (D[i] != dd) continue;
        out[i] = eval_kernel(spec, (Y[i] - y) / b) / b;
    }
    return out;
}

}  // namespace kinkqte
