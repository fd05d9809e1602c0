#include "kinkqte/bandwidth.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "kinkqte/density.hpp"
#include "kinkqte/linalg.hpp"

namespace kinkqte {

namespace {

double median(std::vector<double> v) {
    if (v.empty()) throw EmptyWindow("median of empty set");
    std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

struct SlopeSelectors {
    // w = (Gamma1)^{-1} Lambda per side (2-vectors) and the slope entries of
    // (Gamma1)^{-1} Psi1 (Gamma1)^{-1} per side.
    double bias_plus, bias_minus;   // second component of (Gamma1^{\pm})^{-1} Lambda^{\pm}
    double var_plus, var_minus;     // [ (Gamma1)^{-1} Psi1 (Gamma1)^{-1} ]_{11} per side
};

SlopeSelectors slope_selectors(KernelSpec spec) {
    KernelMoments km = moment_matrices(spec);
    Mat2 gp_inv = inverse2(km.gamma1_plus);
    Mat2 gm_inv = inverse2(km.gamma1_minus);
    Vec2 wp = mul2v(gp_inv, km.lambda_plus);
    Vec2 wm = mul2v(gm_inv, km.lambda_minus);
    Mat2 vp = mul2(mul2(gp_inv, km.psi1_plus), gp_inv);
    Mat2 vm = mul2(mul2(gm_inv, km.psi1_minus), gm_inv);
    return SlopeSelectors{wp[1], wm[1], vp[1][1], vm[1][1]};
}

}  // namespace

double silverman_bandwidth(std::span<const double> x) {
    if (x.size() < 2) throw DegenerateX("silverman: needs at least 2 observations");
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    double sd = std::sqrt(ss / static_cast<double>(x.size() - 1));
    if (!(sd > 0.0)) throw DegenerateX("silverman: running variable has zero variance");
    return 1.06 * sd * std::pow(static_cast<double>(x.size()), -0.2);
}

PreliminaryEstimates preliminary_estimates(const Sample& sample) {
    double med_y = median(std::vector<double>(sample.y.begin(), sample.y.end()));
    PreliminaryEstimates prelim;
    for (Side side : {Side::plus, Side::minus}) {
        std::vector<double> xs, rs;
        for (std::size_t i = 0; i < sample.size(); ++i) {
            double xi = sample.x[i];
            bool on_side = side == Side::plus ? xi > 0.0 : xi < 0.0;
            if (!on_side) continue;
            xs.push_back(xi);
            rs.push_back((sample.d[i] == 1 && sample.y[i] <= med_y) ? 1.0 : 0.0);
        }
        std::vector<double> distinct(xs);
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        if (distinct.size() < 4) {
            throw DegenerateX("preliminary estimates: fewer than 4 distinct x values on the " +
                              std::string(side_name(side)) + " side");
        }
        // Global cubic in z = x / sd(x_side); curvature rescaled back.
        double mean = 0.0;
        for (double v : xs) mean += v;
        mean /= static_cast<double>(xs.size());
        double ss = 0.0;
        for (double v : xs) ss += (v - mean) * (v - mean);
        double scale = std::sqrt(ss / static_cast<double>(xs.size()));
        if (!(scale > 0.0)) throw DegenerateX("preliminary estimates: degenerate side sample");

        std::array<std::array<double, 4>, 4> a{};
        std::array<double, 4> b{};
        for (std::size_t i = 0; i < xs.size(); ++i) {
            double z = xs[i] / scale;
            double pw[4] = {1.0, z, z * z, z * z * z};
            for (int r = 0; r < 4; ++r) {
                for (int c = 0; c < 4; ++c) a[r][c] += pw[r] * pw[c];
                b[r] += pw[r] * rs[i];
            }
        }
        std::array<double, 4> beta = solve4(a, b);
        double curv = 2.0 * beta[2] / (scale * scale);
        if (side == Side::plus) {
            prelim.curvature_plus = curv;
        } else {
            prelim.curvature_minus = curv;
        }
    }
    return prelim;
}

double pilot_rule(double c0_prime, double c0, std::size_t n) {
    return std::pow(1.5 * c0_prime / (c0 * c0), 0.2) * std::pow(static_cast<double>(n), -0.2);
}

double main_rule(double c1_prime, double c1, std::size_t n) {
    return std::pow(1.5 * c1_prime / (c1 * c1), 0.2) * std::pow(static_cast<double>(n), -0.25);
}

double pilot_bandwidth(const Sample& sample, KernelSpec spec, const PreliminaryEstimates& prelim,
                       double fx0, Warnings* warnings, BandwidthIntermediates* intermediates) {
    if (!(fx0 > 0.0)) throw EmptyWindow("pilot bandwidth: estimated f_X(0) must be positive");
    SlopeSelectors sel = slope_selectors(spec);
    double c0 = 0.5 * sel.bias_plus * prelim.curvature_plus -
                0.5 * sel.bias_minus * prelim.curvature_minus;
    double c0p = (prelim.variance_plus * sel.var_plus + prelim.variance_minus * sel.var_minus) / fx0;
    if (intermediates != nullptr) {
        intermediates->c0 = c0;
        intermediates->c0_prime = c0p;
        intermediates->curvature_plus = prelim.curvature_plus;
        intermediates->curvature_minus = prelim.curvature_minus;
    }
    if (c0p <= 0.0) {
        throw DegenerateVariance("pilot bandwidth: variance term C0' is zero, rule gives h0 = 0");
    }
    double h0 = pilot_rule(c0p, c0, sample.size());
    if (c0 == 0.0 || !std::isfinite(h0) || !(h0 > 0.0)) {
        double fallback = silverman_bandwidth(sample.x);
        if (warnings != nullptr) {
            warnings->push_back({WarningCode::pilot_bandwidth_fallback,
                                 "curvature term C0 vanished; using Silverman's rule"});
        }
        if (intermediates != nullptr) intermediates->pilot_fallback = true;
        return fallback;
    }
    return h0;
}

double main_bandwidth(const Sample& sample, KernelSpec spec, double h0, double fx0,
                      Warnings* warnings, BandwidthIntermediates* intermediates) {
    if (!(h0 > 0.0) || !std::isfinite(h0)) {
        throw NonpositiveBandwidth("main bandwidth: pilot h0 must be positive");
    }
    if (!(fx0 > 0.0)) throw EmptyWindow("main bandwidth: estimated f_X(0) must be positive");

    std::vector<double> y0, y1;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        (sample.d[i] == 1 ? y1 : y0).push_back(sample.y[i]);
    }
    if (y0.empty() || y1.empty()) {
        throw DegenerateX("main bandwidth: one treatment arm is empty");
    }
    double med0 = median(std::move(y0));
    double med1 = median(std::move(y1));

    std::vector<double> grid{med0, med1};
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    FirstStageModel check = fit_first_stage(sample, grid, h0, spec);

    SlopeSelectors sel = slope_selectors(spec);
    double c1 = 0.0, c1p = 0.0;
    const double eval_y[2] = {med0, med1};
    for (int d = 0; d < 2; ++d) {
        std::size_t yi = check.nearest_y_index(eval_y[d]);
        double curv_p = check.mu1_fit(yi, d, Side::plus).curvature;
        double curv_m = check.mu1_fit(yi, d, Side::minus).curvature;
        c1 += 0.5 * sel.bias_plus * curv_p - 0.5 * sel.bias_minus * curv_m;
        double sig_p = sigma_hat(sample, check, eval_y[d], d, Side::plus, h0, spec);
        double sig_m = sigma_hat(sample, check, eval_y[d], d, Side::minus, h0, spec);
        c1p += (sig_p * sel.var_plus + sig_m * sel.var_minus) / fx0;
    }
    if (intermediates != nullptr) {
        intermediates->c1 = c1;
        intermediates->c1_prime = c1p;
        intermediates->med_y_d0 = med0;
        intermediates->med_y_d1 = med1;
    }
    double h = main_rule(c1p, c1, sample.size());
    if (c1 == 0.0 || c1p <= 0.0 || !std::isfinite(h) || !(h > 0.0)) {
        double fallback = h0 * std::pow(static_cast<double>(sample.size()), -0.25 + 0.2);
        if (warnings != nullptr) {
            warnings->push_back({WarningCode::main_bandwidth_fallback,
                                 "curvature or variance term vanished; rate-adjusting the pilot"});
        }
        if (intermediates != nullptr) intermediates->main_fallback = true;
        return fallback;
    }
    return h;
}

BandwidthSet select_bandwidths(const Sample& sample, KernelSpec spec,
                               const BandwidthOverrides& overrides, Warnings& warnings,
                               const BandwidthGuardrails& guardrails) {
    BandwidthSet set;
    set.c = overrides.c.value_or(0.0);
    if (!overrides.c.has_value()) set.c = silverman_bandwidth(sample.x);
    if (!(set.c > 0.0) || !std::isfinite(set.c)) {
        throw NonpositiveBandwidth("bandwidth override c must be positive");
    }
    set.fx0 = kde_at_zero(sample.x, set.c, spec);
    if (!(set.fx0 > 0.0)) {
        throw EmptyWindow("no data mass near the kink: estimated f_X(0) = 0");
    }

    if (overrides.h0.has_value()) {
        set.h0 = *overrides.h0;
        if (!(set.h0 > 0.0) || !std::isfinite(set.h0)) {
            throw NonpositiveBandwidth("bandwidth override h0 must be positive");
        }
    } else {
        PreliminaryEstimates prelim = preliminary_estimates(sample);
        set.h0 = pilot_bandwidth(sample, spec, prelim, set.fx0, &warnings, &set.intermediates);
    }
    set.intermediates.h0_rule = set.h0;

    if (overrides.h.has_value()) {
        set.h = *overrides.h;
        if (!(set.h > 0.0) || !std::isfinite(set.h)) {
            throw NonpositiveBandwidth("bandwidth override h must be positive");
        }
        set.intermediates.h_rule = set.h;
    } else {
        set.h = main_bandwidth(sample, spec, set.h0, set.fx0, &warnings, &set.intermediates);
        set.intermediates.h_rule = set.h;
        if (guardrails.enabled) {
            double ref = set.c / (1.06 * std::pow(static_cast<double>(sample.size()), -0.2));
            // ref is sd(X) recovered from Silverman's c when not overridden;
            // recompute directly when c was overridden.
            if (overrides.c.has_value()) {
                double mean = 0.0;
                for (double v : sample.x) mean += v;
                mean /= static_cast<double>(sample.size());
                double ss = 0.0;
                for (double v : sample.x) ss += (v - mean) * (v - mean);
                ref = std::sqrt(ss / static_cast<double>(sample.size() - 1));
            }
            double scale = ref * std::pow(static_cast<double>(sample.size()) / 500.0, -0.25);
            double lo = guardrails.h_lo * scale;
            double hi = guardrails.h_hi * scale;
            double clamped = std::clamp(set.h, lo, hi);
            if (clamped != set.h) {
                set.intermediates.h_clamped = true;
                set.h = clamped;
            }
        }
    }

    if (!overrides.h0.has_value() && guardrails.enabled) {
        double lo = guardrails.h0_lo * set.h;
        double hi = guardrails.h0_hi * set.h;
        double clamped = std::clamp(set.h0, lo, hi);
        if (clamped != set.h0) {
            set.intermediates.h0_clamped = true;
            set.h0 = clamped;
        }
    }
    return set;
}

}  // namespace kinkqte
