#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "kinkqte/rng.hpp"
#include "kinkqte/simulation.hpp"
#include "oracles.hpp"

using namespace kinkqte;

TEST_CASE("assignment rule has the designed kink") {
    CHECK(assignment_threshold(0.0) == doctest::Approx(-1.0));
    // slopes +1 to the right, -1 to the left: kink of magnitude 2
    double eps = 1e-6;
    double right = (assignment_threshold(eps) - assignment_threshold(0.0)) / eps;
    double left = (assignment_threshold(0.0) - assignment_threshold(-eps)) / eps;
    CHECK(right == doctest::Approx(1.0));
    CHECK(left == doctest::Approx(-1.0));
}

TEST_CASE("draws are deterministic and reproduce the configured moments") {
    DgpConfig cfg;
    Sample a = draw_sample(cfg, 1000, 7);
    Sample b = draw_sample(cfg, 1000, 7);
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);
    CHECK(a.d == b.d);

    const std::size_t n = 100000;
    Sample big = draw_sample(cfg, n, 11);
    // recover U and V is not possible from the sample; check X moments and
    // the treated share at the kink instead
    double mx = 0.0;
    for (double x : big.x) mx += x;
    mx /= n;
    double vx = 0.0;
    for (double x : big.x) vx += (x - mx) * (x - mx);
    vx /= n - 1;
    CHECK(std::fabs(mx) < 0.02);
    CHECK(std::fabs(vx - 1.0) < 0.02);
}

TEST_CASE("latent draws match the configured covariance") {
    // reconstruct (X, U, V) from the generator's own recipe and check the
    // sample covariance against the configuration entrywise
    DgpConfig cfg;
    auto l = dgp_cholesky(cfg);
    rng::NormalStream stream(13);
    const std::size_t n = 100000;
    double sum[3] = {0, 0, 0};
    double cross[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    for (std::size_t i = 0; i < n; ++i) {
        double z0 = stream.next(), z1 = stream.next(), z2 = stream.next();
        double w[3] = {l[0][0] * z0, l[1][0] * z0 + l[1][1] * z1,
                       l[2][0] * z0 + l[2][1] * z1 + l[2][2] * z2};
        for (int r = 0; r < 3; ++r) {
            sum[r] += w[r];
            for (int c = 0; c < 3; ++c) cross[r][c] += w[r] * w[c];
        }
    }
    double target[3][3] = {{1.0, 0.5, 0.5}, {0.5, 1.0, 0.5}, {0.5, 0.5, 1.0}};
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            double cov = cross[r][c] / n - (sum[r] / n) * (sum[c] / n);
            CHECK(std::fabs(cov - target[r][c]) < 0.02);
        }
    }
}

TEST_CASE("treatment probabilities follow the conditional-normal formula") {
    DgpConfig cfg;
    const std::size_t n = 100000;
    Sample s = draw_sample(cfg, n, 17);
    // P(D=1 | X=x) = Phi((|x| - 1 - 0.5 x) / sqrt(0.75)) under the defaults
    for (double center : {-1.5, -0.75, 0.0, 0.75, 1.5}) {
        double width = 0.25;
        long hits = 0, total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (std::fabs(s.x[i] - center) <= width) {
                ++total;
                hits += s.d[i];
            }
        }
        REQUIRE(total > 3000);
        // average the formula over the bin to respect its curvature
        double expect = 0.0;
        const int cells = 40;
        for (int c = 0; c < cells; ++c) {
            double x = center - width + (2.0 * width) * (c + 0.5) / cells;
            expect += oracles::Phi((std::fabs(x) - 1.0 - 0.5 * x) / std::sqrt(0.75)) *
                      oracles::phi(x);
        }
        double norm = 0.0;
        for (int c = 0; c < cells; ++c) {
            double x = center - width + (2.0 * width) * (c + 0.5) / cells;
            norm += oracles::phi(x);
        }
        expect /= norm;
        CHECK(std::fabs(static_cast<double>(hits) / total - expect) < 0.012);
    }
}

TEST_CASE("true QTE: closed form, nulls, and rejection sampling cross-check") {
    DgpConfig cfg;
    cfg.beta1 = 0.7;
    cfg.gamma1 = 0.0;
    for (double theta : {0.1, 0.5, 0.9}) CHECK(true_qte(cfg, theta) == doctest::Approx(0.7));
    cfg.beta1 = 0.0;
    for (double theta : {0.2, 0.8}) CHECK(true_qte(cfg, theta) == doctest::Approx(0.0));

    cfg.gamma1 = 1.0;
    ConditionalLaw law = compliance_conditional_u(cfg);
    oracles::UCond oracle = oracles::u_given_compliance(cfg);
    CHECK(law.mean == doctest::Approx(oracle.mean).epsilon(1e-12));
    CHECK(law.sd == doctest::Approx(oracle.sd).epsilon(1e-12));
    CHECK(law.mean == doctest::Approx(-1.0 / 3.0));
    CHECK(law.sd == doctest::Approx(std::sqrt(2.0 / 3.0)));
    CHECK(true_qte(cfg, 0.5) == doctest::Approx(cfg.beta1 + law.mean).epsilon(1e-9));

    oracles::UCond sampled = oracles::u_given_compliance_rejection(cfg, 19);
    CHECK(std::fabs(law.mean - sampled.mean) < 0.02);
    CHECK(std::fabs(law.sd - sampled.sd) < 0.02);
}

TEST_CASE("invalid configurations are rejected") {
    DgpConfig cfg;
    cfg.rho_xu = 0.95;
    cfg.rho_xv = -0.95;
    cfg.rho_uv = 0.95;
    CHECK_THROWS_AS(dgp_cholesky(cfg), NotPositiveDefinite);
    DgpConfig bad_sigma;
    bad_sigma.sigma_u = 0.0;
    CHECK_THROWS_AS(draw_sample(bad_sigma, 10, 1), NotPositiveDefinite);
    DgpConfig bad_rho;
    bad_rho.rho_uv = 1.0;
    CHECK_THROWS_AS(draw_sample(bad_rho, 10, 1), NotPositiveDefinite);
}

TEST_CASE("coverage harness smoke run emits a well-formed table") {
    DgpConfig cfg;
    std::vector<CoverageCell> cells{{300, 0.0, 0.0}};
    PipelineOptions popts;
    McResult result = run_coverage(cfg, cells, 1, 100, 0.05, 5, popts, 1);
    REQUIRE(result.cells.size() == 1);
    CHECK(result.cells[0].reps == 1);
    CHECK(result.cells[0].failures + 1 >= 1);
    std::string table = format_coverage_table(result);
    CHECK(table.find("Significance") != std::string::npos);
    CHECK(table.find("Homogeneity") != std::string::npos);
    CHECK(table.find("n=") != std::string::npos);
    std::string csv = coverage_csv(result);
    CHECK(csv.find("n,beta1,gamma1") == 0);
}

TEST_CASE("coverage harness is deterministic and thread-count independent") {
    DgpConfig cfg;
    std::vector<CoverageCell> cells{{300, 0.0, 0.0}, {300, 1.0, 0.0}};
    PipelineOptions popts;
    McResult a = run_coverage(cfg, cells, 12, 120, 0.05, 21, popts, 1);
    McResult b = run_coverage(cfg, cells, 12, 120, 0.05, 21, popts, 3);
    REQUIRE(a.cells.size() == b.cells.size());
    for (std::size_t c = 0; c < a.cells.size(); ++c) {
        CHECK(a.cells[c].accept_ts == b.cells[c].accept_ts);
        CHECK(a.cells[c].accept_th == b.cells[c].accept_th);
        CHECK(a.cells[c].failures == b.cells[c].failures);
    }
    CHECK(coverage_csv(a) == coverage_csv(b));
}

TEST_CASE("directional power at desk scale") {
    DgpConfig cfg;
    std::vector<CoverageCell> cells{{1000, 0.0, 0.0}, {1000, 1.5, 0.0}};
    PipelineOptions popts;
    McResult r = run_coverage(cfg, cells, 60, 300, 0.05, 33, popts, 1);
    // a 1.5-sigma treatment shift must collapse significance acceptance
    CHECK(r.cells[1].accept_rate_ts() < r.cells[0].accept_rate_ts() - 0.2);
    // while leaving homogeneity roughly alone (pure level shift)
    CHECK(std::fabs(r.cells[1].accept_rate_th() - r.cells[0].accept_rate_th()) < 0.2);
}
