#include "kinkqte/density.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kinkqte/local_poly.hpp"

namespace kinkqte {

namespace {

double sample_sd(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double kink_denominator(const Sample& sample, int d, double h, KernelSpec spec,
                        double tol_denominator) {
    std::vector<double> resp = indicator_response(sample.y, sample.d, 0.0, d,
                                                  ResponseKind::treatment_only);
    OneSidedFit plus = fit_one_sided(sample.x, resp, Side::plus, h, spec, 2);
    OneSidedFit minus = fit_one_sided(sample.x, resp, Side::minus, h, spec, 2);
    double kappa = plus.slope - minus.slope;
    if (std::fabs(kappa) < tol_denominator) {
        throw WeakKink("conditional density: first-stage kink below tolerance for arm d=" +
                           std::to_string(d),
                       std::fabs(kappa));
    }
    return kappa;
}

}  // namespace

double density_floor_at(double base, std::size_t n) {
    return base * std::cbrt(kFloorReferenceN / static_cast<double>(n));
}

double kde_at_zero(std::span<const double> x, double c, KernelSpec spec) {
    if (!(c > 0.0) || !std::isfinite(c)) {
        throw NonpositiveBandwidth("kde_at_zero: bandwidth must be positive");
    }
    if (x.empty()) throw InputError("kde_at_zero: empty sample");
    double acc = 0.0;
    for (double xi : x) acc += eval_kernel(spec, xi / c);
    return acc / (static_cast<double>(x.size()) * c);
}

double conditional_density(const Sample& sample, double y, int d, double a, double b, double h,
                           KernelSpec spec, double density_floor_std, double tol_denominator) {
    double kappa = kink_denominator(sample, d, h, spec, tol_denominator);
    std::vector<double> resp = smoothed_response(sample.y, sample.d, y, d, b, spec);
    OneSidedFit plus = fit_one_sided(sample.x, resp, Side::plus, a, spec, 2);
    OneSidedFit minus = fit_one_sided(sample.x, resp, Side::minus, a, spec, 2);
    double sd_y = sample_sd(sample.y);
    double floor = sd_y > 0.0 ? density_floor_std / sd_y : density_floor_std;
    return std::max((plus.slope - minus.slope) / kappa, floor);
}

DensityEstimates estimate_densities(const Sample& sample, const std::vector<double>& y_grid,
                                    double fx0, double a, double b, double h, KernelSpec spec,
                                    double density_floor_std, double tol_denominator) {
    DensityEstimates out;
    out.fx0 = fx0;
    out.y_grid = y_grid;
    out.bandwidth_a = a;
    out.bandwidth_b = b;
    double sd_y = sample_sd(sample.y);
    out.floor_value = sd_y > 0.0 ? density_floor_std / sd_y : density_floor_std;

    OneSidedDesign plus(sample.x, Side::plus, a, spec, 2);
    OneSidedDesign minus(sample.x, Side::minus, a, spec, 2);
    const std::size_t m = y_grid.size();
    for (int d = 0; d < 2; ++d) {
        double kappa = kink_denominator(sample, d, h, spec, tol_denominator);
        auto& dest = out.f_cond[static_cast<std::size_t>(d)];
        auto& flags = out.floored[static_cast<std::size_t>(d)];
        dest.resize(m);
        flags.resize(m);
        for (std::size_t g = 0; g < m; ++g) {
            std::vector<double> resp = smoothed_response(sample.y, sample.d, y_grid[g], d, b, spec);
            double num = plus.solve(resp).slope - minus.solve(resp).slope;
            double value = num / kappa;
            flags[g] = value < out.floor_value ? 1 : 0;
            dest[g] = std::max(value, out.floor_value);
        }
    }
    return out;
}

}  // namespace kinkqte
