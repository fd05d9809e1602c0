#include <algorithm>
#include <cmath>
#include <random>

#include <doctest.h>

#include "kinkqte/density.hpp"
#include "kinkqte/local_poly.hpp"
#include "kinkqte/rng.hpp"
#include "kinkqte/simulation.hpp"
#include "oracles.hpp"

using namespace kinkqte;

TEST_CASE("kde at zero: point mass and analytic targets") {
    KernelSpec uniform{KernelKind::uniform};
    std::vector<double> single{0.0};
    CHECK(kde_at_zero(single, 1.0, uniform) == doctest::Approx(0.5));
    CHECK_THROWS_AS(kde_at_zero(single, 0.0, uniform), NonpositiveBandwidth);

    std::mt19937_64 eng(51);
    const std::size_t n = 100000;
    std::vector<double> unif(n), norm(n);
    rng::NormalStream stream(52);
    for (std::size_t i = 0; i < n; ++i) {
        unif[i] = 2.0 * rng::next_uniform(eng) - 1.0;
        norm[i] = stream.next();
    }
    KernelSpec tri;
    CHECK(kde_at_zero(unif, silverman_bandwidth(unif), tri) == doctest::Approx(0.5).epsilon(0.1));
    CHECK(kde_at_zero(norm, silverman_bandwidth(norm), tri) ==
          doctest::Approx(0.39894).epsilon(0.12));
}

TEST_CASE("kde permutation invariance") {
    std::mt19937_64 eng(53);
    std::vector<double> x(500);
    for (double& v : x) v = 2.0 * rng::next_uniform(eng) - 1.0;
    double base = kde_at_zero(x, 0.7, KernelSpec{});
    std::reverse(x.begin(), x.end());
    CHECK(kde_at_zero(x, 0.7, KernelSpec{}) == doctest::Approx(base).epsilon(1e-13));
}

namespace {

Sample spread_sample(std::uint64_t seed, std::size_t n) {
    std::mt19937_64 eng(seed);
    rng::NormalStream stream(seed + 1);
    Sample s;
    s.y.resize(n);
    s.x.resize(n);
    s.d.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        s.x[i] = 3.0 * (rng::next_uniform(eng) - 0.5);
        s.d[i] = rng::next_uniform(eng) < 0.5 ? 1 : 0;
        s.y[i] = stream.next() + (s.x[i] > 0 ? 0.4 * s.x[i] : -0.1 * s.x[i]) + 0.3 * s.d[i];
    }
    return s;
}

}  // namespace

TEST_CASE("empty arm in the smoothing window floors the estimate") {
    // Treated observations exist only outside the numerator window (|x| > a),
    // so the smoothed response vanishes there while the wider denominator
    // window still sees a treatment kink.
    Sample s = spread_sample(55, 4000);
    const double a = 0.5, h = 1.6;
    for (std::size_t i = 0; i < s.size(); ++i) {
        s.d[i] = (std::fabs(s.x[i]) > a && std::fabs(s.x[i]) <= h) ? 1 : 0;
    }
    double floor_std = 0.2;
    double est = conditional_density(s, 0.0, 1, a, 0.4, h, KernelSpec{}, floor_std);
    double sd_y = 0.0;
    {
        double mean = 0.0;
        for (double y : s.y) mean += y;
        mean /= static_cast<double>(s.size());
        for (double y : s.y) sd_y += (y - mean) * (y - mean);
        sd_y = std::sqrt(sd_y / static_cast<double>(s.size() - 1));
    }
    CHECK(est == doctest::Approx(floor_std / sd_y));
}

TEST_CASE("density scaling law under outcome dilation") {
    Sample s = spread_sample(57, 2000);
    KernelSpec spec;
    double a = 1.2, b = 0.5, h = 1.4;
    double f = conditional_density(s, 0.3, 1, a, b, h, spec, 1e-9);
    Sample doubled = s;
    for (double& y : doubled.y) y *= 2.0;
    double f2 = conditional_density(doubled, 0.6, 1, a, 2.0 * b, h, spec, 1e-9);
    CHECK(f2 == doctest::Approx(0.5 * f).epsilon(1e-9));
}

TEST_CASE("estimate near the Gaussian truth at scale") {
    DgpConfig cfg;
    const std::size_t n = 20000;
    Sample s = draw_sample(cfg, n, 59);
    double h = 3.0 * std::pow(static_cast<double>(n) / 500.0, -0.25);
    double a = 1.4 * h;
    double b = 3.0 * silverman_bandwidth(s.y);
    double truth_median = cfg.alpha0 + cfg.gamma0 * oracles::u_given_compliance(cfg).mean;
    double est = conditional_density(s, truth_median, 1, a, b, h, KernelSpec{}, 0.01);
    double truth = oracles::density_truth(cfg, truth_median, 1);
    CHECK(std::fabs(est - truth) / truth < 0.30);
}

TEST_CASE("floors apply and are flagged") {
    DgpConfig cfg;
    Sample s = draw_sample(cfg, 1500, 61);
    double h = 2.2, a = 1.4 * h, b = 3.0 * silverman_bandwidth(s.y);
    std::vector<double> grid = make_y_grid(s, h, 51);
    Warnings w;
    BandwidthSet bw = select_bandwidths(s, KernelSpec{}, {}, w);
    DensityEstimates dens =
        estimate_densities(s, grid, bw.fx0, a, b, h, KernelSpec{}, 0.45);
    for (int d = 0; d < 2; ++d) {
        for (std::size_t g = 0; g < grid.size(); ++g) {
            CHECK(dens.f_cond[d][g] >= dens.floor_value);
            if (dens.floored[d][g] != 0) {
                CHECK(dens.f_cond[d][g] == doctest::Approx(dens.floor_value));
            }
        }
    }
    CHECK(dens.floor_value > 0.0);
}

TEST_CASE("floor schedule recedes with n") {
    double base = kDefaultDensityFloor;
    CHECK(density_floor_at(base, 500) == doctest::Approx(base));
    CHECK(density_floor_at(base, 4000) == doctest::Approx(base / 2.0));
    CHECK(density_floor_at(base, 4000) < density_floor_at(base, 1000));
}

TEST_CASE("smoothed-response slope agrees with the y-derivative of indicator slopes") {
    // Two routes to the x-derivative of f(y | x, d) P(d | x): the slope of
    // the kernel-smoothed response, and a central difference in y of the
    // indicator-response slopes.
    DgpConfig cfg;
    const std::size_t n = 20000;
    Sample s = draw_sample(cfg, n, 63);
    KernelSpec spec;
    double a = 1.7;
    double b = 3.0 * silverman_bandwidth(s.y);
    double y = cfg.alpha0 + cfg.gamma0 * oracles::u_given_compliance(cfg).mean;

    OneSidedDesign plus(s.x, Side::plus, a, spec, 2);
    auto smooth = smoothed_response(s.y, s.d, y, 1, b, spec);
    double route_a = plus.solve(smooth).slope;

    double delta = b;
    auto hi = indicator_response(s.y, s.d, y + delta, 1, ResponseKind::joint);
    auto lo = indicator_response(s.y, s.d, y - delta, 1, ResponseKind::joint);
    double route_b = (plus.solve(hi).slope - plus.solve(lo).slope) / (2.0 * delta);

    CHECK(std::fabs(route_a - route_b) / std::max(std::fabs(route_b), 1e-12) < 0.25);
}
