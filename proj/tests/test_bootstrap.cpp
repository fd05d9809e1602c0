#include <algorithm>
#include <cmath>
#include <random>

#include <doctest.h>

#include "kinkqte/analysis.hpp"
#include "kinkqte/bootstrap.hpp"
#include "kinkqte/rng.hpp"
#include "kinkqte/simulation.hpp"
#include "oracles.hpp"

using namespace kinkqte;

namespace {

struct Fixture {
    Sample sample;
    PipelineResult result;
    FirstStageModel first_stage;

    explicit Fixture(std::size_t n = 800, std::uint64_t seed = 91) {
        DgpConfig cfg;
        sample = draw_sample(cfg, n, seed);
        PipelineOptions opts;
        opts.with_bootstrap = false;
        result = run_pipeline(sample, opts);
        first_stage = fit_first_stage(sample, result.y_grid, result.bandwidths.h, opts.kernel);
    }
};

double sample_sd(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

TEST_CASE("zero multipliers annihilate the whole chain") {
    Fixture fx;
    std::vector<double> zero(fx.sample.size(), 0.0);
    EmpDraw emp = emp_draw(fx.sample, fx.first_stage, fx.result.bandwidths.h, KernelSpec{}, zero);
    for (int s = 0; s < 2; ++s) {
        for (int d = 0; d < 2; ++d) {
            CHECK(emp.nu2[s][d] == 0.0);
            for (double v : emp.nu1[s][d]) CHECK(v == 0.0);
        }
    }
    std::vector<double> xi =
        xi_process(fx.result.cdf1, fx.result.cdf0, emp, fx.result.densities, fx.result.qte);
    for (double v : xi) CHECK(v == 0.0);
}

TEST_CASE("linearity in the multipliers") {
    Fixture fx;
    EmpEngine engine(fx.sample, fx.first_stage, fx.result.bandwidths.h, KernelSpec{});
    std::vector<double> a = rng::normal_vector(101, fx.sample.size());
    std::vector<double> b = rng::normal_vector(102, fx.sample.size());
    std::vector<double> ab(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) ab[i] = a[i] + b[i];
    EmpDraw da = engine.draw(a);
    EmpDraw db = engine.draw(b);
    EmpDraw dab = engine.draw(ab);
    for (int s = 0; s < 2; ++s) {
        for (int d = 0; d < 2; ++d) {
            CHECK(dab.nu2[s][d] ==
                  doctest::Approx(da.nu2[s][d] + db.nu2[s][d]).epsilon(1e-10));
            for (std::size_t g = 0; g < dab.nu1[s][d].size(); ++g) {
                CHECK(dab.nu1[s][d][g] ==
                      doctest::Approx(da.nu1[s][d][g] + db.nu1[s][d][g]).epsilon(1e-10));
            }
        }
    }
    // scaling both EMP components scales the delta-method process
    std::vector<double> xa =
        xi_process(fx.result.cdf1, fx.result.cdf0, da, fx.result.densities, fx.result.qte);
    std::vector<double> a3(a);
    for (double& v : a3) v *= 3.0;
    EmpDraw d3 = engine.draw(a3);
    std::vector<double> x3 =
        xi_process(fx.result.cdf1, fx.result.cdf0, d3, fx.result.densities, fx.result.qte);
    for (std::size_t j = 0; j < xa.size(); ++j) {
        CHECK(x3[j] == doctest::Approx(3.0 * xa[j]).epsilon(1e-10));
    }
}

TEST_CASE("multiplier weights match a by-hand score evaluation") {
    // Tiny configuration: the plus side holds three distinct points, so the
    // expected value is computable from a long-double normal-equation solve
    // and the influence form sqrt(nh) e1' M^{-1} r(u) K(u) resid.
    Sample s;
    s.x = {0.25, 0.5, 0.75, -0.25, -0.5, -0.75};
    s.y = {0.1, 0.9, 0.4, 0.2, 0.8, 0.6};
    s.d = {1, 0, 1, 0, 1, 0};
    double h = 1.0;
    KernelSpec spec;
    std::vector<double> grid{0.5};
    FirstStageModel model = fit_first_stage(s, grid, h, spec);
    std::vector<double> xi{0.7, -1.1, 0.3, 0.0, 0.0, 0.0};
    EmpDraw emp = emp_draw(s, model, h, spec, xi);

    auto tri = [](double u) { return std::fabs(u) > 1.0 ? 0.0 : 1.0 - std::fabs(u); };
    long double m[5] = {0, 0, 0, 0, 0};
    for (int i = 0; i < 3; ++i) {
        long double u = s.x[static_cast<std::size_t>(i)] / h;
        long double w = tri(static_cast<double>(u));
        long double pw = w;
        for (int k = 0; k <= 4; ++k) {
            m[k] += pw;
            pw *= u;
        }
    }
    long double a00 = m[0], a01 = m[1], a02 = m[2], a11 = m[2], a12 = m[3], a22 = m[4];
    long double det = a00 * (a11 * a22 - a12 * a12) - a01 * (a01 * a22 - a12 * a02) +
                      a02 * (a01 * a12 - a11 * a02);
    long double z0 = -(a01 * a22 - a12 * a02) / det;
    long double z1 = (a00 * a22 - a02 * a02) / det;
    long double z2 = -(a00 * a12 - a01 * a02) / det;

    double expected = 0.0;
    double scale = std::sqrt(6.0 * h);
    for (int i = 0; i < 3; ++i) {
        double u = s.x[static_cast<std::size_t>(i)] / h;
        double w = tri(u);
        double indicator = (s.d[static_cast<std::size_t>(i)] == 1 &&
                            s.y[static_cast<std::size_t>(i)] <= 0.5)
                               ? 1.0
                               : 0.0;
        double resid = indicator - model.mu1_value(s.x[static_cast<std::size_t>(i)], 0, 1);
        expected += xi[static_cast<std::size_t>(i)] *
                    static_cast<double>(z0 + z1 * u + z2 * u * u) * w * resid;
    }
    expected *= scale;
    CHECK(emp.nu1[0][1][0] == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("multiplier processes are centered across draws") {
    Fixture fx(600, 93);
    EmpEngine engine(fx.sample, fx.first_stage, fx.result.bandwidths.h, KernelSpec{});
    const int draws = 2000;
    std::size_t mid = fx.result.y_grid.size() / 2;
    std::vector<double> nu1_mid, nu2_plus;
    for (int b = 0; b < draws; ++b) {
        std::vector<double> xi = rng::normal_vector(rng::substream_seed(7, 1, b),
                                                    fx.sample.size());
        EmpDraw emp = engine.draw(xi);
        nu1_mid.push_back(emp.nu1[0][1][mid]);
        nu2_plus.push_back(emp.nu2[0][1]);
    }
    for (const std::vector<double>* v : {&nu1_mid, &nu2_plus}) {
        double mean = 0.0;
        for (double x : *v) mean += x;
        mean /= draws;
        double bound = 3.0 * sample_sd(*v) / std::sqrt(static_cast<double>(draws));
        CHECK(std::fabs(mean) <= bound);
    }
}

TEST_CASE("length mismatch raises") {
    Fixture fx(600, 95);
    std::vector<double> xi(10, 1.0);
    CHECK_THROWS_AS(
        emp_draw(fx.sample, fx.first_stage, fx.result.bandwidths.h, KernelSpec{}, xi),
        LengthMismatch);
}

TEST_CASE("theta averaging: trapezoid demeaning is idempotent") {
    std::mt19937_64 eng(97);
    std::vector<double> theta = make_theta_grid(0.1, 41);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> v(theta.size());
        for (double& x : v) x = 10.0 * rng::next_uniform(eng) - 5.0;
        double mean = theta_average(v, theta);
        std::vector<double> centered(v);
        for (double& x : centered) x -= mean;
        CHECK(std::fabs(theta_average(centered, theta)) < 1e-12);
    }
    std::vector<double> constant(theta.size(), 3.25);
    CHECK(theta_average(constant, theta) == doctest::Approx(3.25).epsilon(1e-14));
}

TEST_CASE("sup test convention: reject iff stat above crit iff p below alpha") {
    std::mt19937_64 eng(99);
    for (int trial = 0; trial < 300; ++trial) {
        std::size_t b = 100 + static_cast<std::size_t>(rng::next_uniform(eng) * 400);
        std::vector<double> draws(b);
        for (double& v : draws) v = rng::next_uniform(eng) * 10.0;
        if (trial % 3 == 0) {
            // inject ties, including with the statistic
            for (std::size_t i = 0; i + 1 < b; i += 2) draws[i + 1] = draws[i];
        }
        double stat = trial % 5 == 0 ? draws[trial % b] : rng::next_uniform(eng) * 12.0;
        double alpha = 0.01 + 0.2 * rng::next_uniform(eng);
        TestResult r = sup_test(stat, draws, alpha);
        CHECK(r.reject == (r.stat > r.crit));
        CHECK(r.reject == (r.p < alpha));
        CHECK(r.p >= 0.0);
        CHECK(r.p <= 1.0);
    }
}

TEST_CASE("degenerate statistics accept with p = 1") {
    std::vector<double> draws(200, 1.0);
    TestResult r = sup_test(0.0, draws, 0.05);
    CHECK(r.p == doctest::Approx(1.0));
    CHECK_FALSE(r.reject);

    // constant tau: the homogeneity statistic is exactly zero
    QteProcess qte;
    qte.theta_grid = make_theta_grid(0.1, 21);
    qte.tau.assign(21, 0.73);
    TestResult th = homogeneity_test(qte, draws, 10.0, 0.05);
    CHECK(th.stat == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(th.p == doctest::Approx(1.0));

    qte.tau.assign(21, 0.0);
    TestResult ts = significance_test(qte, draws, 10.0, 0.05);
    CHECK(ts.stat == 0.0);
    CHECK(ts.p == doctest::Approx(1.0));
}

TEST_CASE("bootstrap run: determinism, thread independence, duality") {
    Fixture fx(700, 103);
    auto run = [&](int threads) {
        return run_bootstrap(fx.sample, fx.first_stage, fx.result.cdf1, fx.result.cdf0,
                             fx.result.densities, fx.result.qte, fx.result.bandwidths.h,
                             KernelSpec{}, 300, 0.05, 12345, threads, false);
    };
    BootstrapRun a = run(1);
    BootstrapRun b = run(1);
    BootstrapRun c = run(3);
    CHECK(a.sup_ts == b.sup_ts);
    CHECK(a.sup_ts == c.sup_ts);
    CHECK(a.sup_th == c.sup_th);
    CHECK(a.ts.crit == c.ts.crit);
    CHECK(a.ts.p == c.ts.p);

    // duality with the uniform band: reject iff zero escapes somewhere
    UniformBand band = uniform_bands(fx.result.qte, a.ts.crit, a.rate);
    bool escapes = false;
    for (std::size_t j = 0; j < band.lo.size(); ++j) {
        escapes = escapes || band.lo[j] > 0.0 || band.hi[j] < 0.0;
    }
    CHECK(escapes == a.ts.reject);
    CHECK(band.half_width == doctest::Approx(a.ts.crit / a.rate));
    for (std::size_t j = 0; j < band.lo.size(); ++j) {
        CHECK(band.lo[j] <= fx.result.qte.tau[j]);
        CHECK(band.hi[j] >= fx.result.qte.tau[j]);
    }

    // crit = 0 collapses the band onto tau
    UniformBand tight = uniform_bands(fx.result.qte, 0.0, a.rate);
    for (std::size_t j = 0; j < tight.lo.size(); ++j) {
        CHECK(tight.lo[j] == fx.result.qte.tau[j]);
        CHECK(tight.hi[j] == fx.result.qte.tau[j]);
    }
}

TEST_CASE("bootstrap scale tracks the sampling distribution at mid quantiles") {
    DgpConfig cfg;
    const std::size_t n = 2000;
    std::vector<double> mc;
    for (int rep = 0; rep < 400; ++rep) {
        try {
            Sample s = draw_sample(cfg, n, rng::substream_seed(5, 77, rep));
            PipelineOptions o;
            o.with_bootstrap = false;
            PipelineResult r = run_pipeline(s, o);
            double rate = std::sqrt(static_cast<double>(n) * std::pow(r.bandwidths.h, 3.0));
            mc.push_back(rate * r.qte.tau[r.qte.tau.size() / 2]);
        } catch (const Error&) {
        }
    }
    double mc_sd = sample_sd(mc);

    std::vector<double> ratios;
    for (int di = 0; di < 5; ++di) {
        Sample s = draw_sample(cfg, n, rng::substream_seed(5, 77, static_cast<std::uint64_t>(di)));
        PipelineOptions o;
        o.B = 1000;
        o.seed = 9;
        o.store_processes = true;
        PipelineResult r = run_pipeline(s, o);
        std::vector<double> mid;
        for (const auto& proc : r.boot.xi_processes) mid.push_back(proc[proc.size() / 2]);
        ratios.push_back(sample_sd(mid) / mc_sd);
    }
    std::sort(ratios.begin(), ratios.end());
    CHECK(ratios[2] > 0.75);
    CHECK(ratios[2] < 1.33);
}
