#include "kinkqte/first_stage.hpp"

#include <algorithm>
#include <cmath>

namespace kinkqte {

namespace {

double extrapolate(const FitTriple& f, double x) {
    return f.level + f.slope * x + 0.5 * f.curvature * x * x;
}

}  // namespace

double FirstStageModel::mu1_value(double x, std::size_t y_idx, int d) const {
    if (x == 0.0 || std::fabs(x / bandwidth) > 1.0) return 0.0;
    Side side = x > 0.0 ? Side::plus : Side::minus;
    return extrapolate(mu1_fit(y_idx, d, side), x);
}

double FirstStageModel::mu2_value(double x, int d) const {
    if (x == 0.0 || std::fabs(x / bandwidth) > 1.0) return 0.0;
    Side side = x > 0.0 ? Side::plus : Side::minus;
    return std::clamp(extrapolate(mu2_fit(d, side), x), 0.0, 1.0);
}

double FirstStageModel::mu1_slope_diff(std::size_t y_idx, int d) const {
    return mu1_fit(y_idx, d, Side::plus).slope - mu1_fit(y_idx, d, Side::minus).slope;
}

double FirstStageModel::mu2_slope_diff(int d) const {
    return mu2_fit(d, Side::plus).slope - mu2_fit(d, Side::minus).slope;
}

std::size_t FirstStageModel::nearest_y_index(double y) const {
    auto it = std::lower_bound(y_grid.begin(), y_grid.end(), y);
    if (it == y_grid.end()) return y_grid.size() - 1;
    if (it == y_grid.begin()) return 0;
    std::size_t hi = static_cast<std::size_t>(it - y_grid.begin());
    return (y - y_grid[hi - 1] <= y_grid[hi] - y) ? hi - 1 : hi;
}

FirstStageModel fit_first_stage(const Sample& sample, std::vector<double> y_grid, double h,
                                KernelSpec spec) {
    if (y_grid.empty()) throw InputError("fit_first_stage: empty y grid");
    if (!std::is_sorted(y_grid.begin(), y_grid.end())) {
        throw InputError("fit_first_stage: y grid must be nondecreasing");
    }
    FirstStageModel model;
    model.y_grid = std::move(y_grid);
    model.bandwidth = h;
    const std::size_t m = model.y_grid.size();

    for (Side side : {Side::plus, Side::minus}) {
        OneSidedDesign design(sample.x, side, h, spec, 2);
        const std::size_t si = FirstStageModel::side_index(side);
        const auto& window = design.window();
        const auto& weight = design.weights();
        const auto& scaled = design.scaled_x();

        // mu2 fits: response 1{D = d}; right-hand sides accumulate directly.
        for (int d = 0; d < 2; ++d) {
            Vec3 rhs{0.0, 0.0, 0.0};
            for (std::size_t k = 0; k < window.size(); ++k) {
                if (sample.d[static_cast<std::size_t>(window[k])] != d) continue;
                double u = scaled[k];
                double w = weight[k];
                rhs[0] += w;
                rhs[1] += w * u;
                rhs[2] += w * u * u;
            }
            OneSidedFit fit = design.solve_rhs(rhs);
            model.mu2[static_cast<std::size_t>(d)][si] =
                FitTriple{fit.level, fit.slope, fit.curvature};
        }

        // mu1 fits over the y grid: members of each treatment arm sorted by
        // outcome give prefix-sum right-hand sides, one solve per grid point.
        for (int d = 0; d < 2; ++d) {
            std::vector<std::size_t> members;
            members.reserve(window.size());
            for (std::size_t k = 0; k < window.size(); ++k) {
                if (sample.d[static_cast<std::size_t>(window[k])] == d) members.push_back(k);
            }
            std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
                double ya = sample.y[static_cast<std::size_t>(window[a])];
                double yb = sample.y[static_cast<std::size_t>(window[b])];
                if (ya != yb) return ya < yb;
                return a < b;
            });
            std::vector<double> sorted_y(members.size());
            std::vector<Vec3> prefix(members.size() + 1, Vec3{0.0, 0.0, 0.0});
            for (std::size_t k = 0; k < members.size(); ++k) {
                std::size_t w = members[k];
                sorted_y[k] = sample.y[static_cast<std::size_t>(window[w])];
                double wk = weight[w];
                double u = scaled[w];
                prefix[k + 1][0] = prefix[k][0] + wk;
                prefix[k + 1][1] = prefix[k][1] + wk * u;
                prefix[k + 1][2] = prefix[k][2] + wk * u * u;
            }
            auto& dest = model.mu1[static_cast<std::size_t>(d)][si];
            dest.resize(m);
            for (std::size_t g = 0; g < m; ++g) {
                std::size_t cnt = static_cast<std::size_t>(
                    std::upper_bound(sorted_y.begin(), sorted_y.end(), model.y_grid[g]) -
                    sorted_y.begin());
                OneSidedFit fit = design.solve_rhs(prefix[cnt]);
                dest[g] = FitTriple{fit.level, fit.slope, fit.curvature};
            }
        }
    }
    return model;
}

double sigma_hat(const Sample& sample, const FirstStageModel& check_model, double y, int d,
                 Side side, double h0, KernelSpec spec) {
    if (!(h0 > 0.0) || !std::isfinite(h0)) {
        throw NonpositiveBandwidth("sigma_hat: bandwidth must be positive");
    }
    std::size_t y_idx = check_model.nearest_y_index(y);
    double num = 0.0;
    double den = 0.0;
    const std::int8_t dd = static_cast<std::int8_t>(d);
    for (std::size_t i = 0; i < sample.size(); ++i) {
        double xi = sample.x[i];
        bool on_side = side == Side::plus ? xi > 0.0 : xi < 0.0;
        if (!on_side) continue;
        double u = xi / h0;
        if (std::fabs(u) > 1.0) continue;
        double w = eval_kernel(spec, u);
        if (w <= 0.0) continue;
        double indicator = (sample.d[i] == dd && sample.y[i] <= y) ? 1.0 : 0.0;
        double resid = indicator - check_model.mu1_value(xi, y_idx, d);
        num += resid * resid * w;
        den += w;
    }
    if (den <= 0.0) {
        throw EmptyWindow("sigma_hat: no observations with positive weight on the " +
                          std::string(side_name(side)) + " side");
    }
    return std::sqrt(num / den);
}

}  // namespace kinkqte
