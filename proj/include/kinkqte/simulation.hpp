#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kinkqte/analysis.hpp"
#include "kinkqte/types.hpp"

namespace kinkqte {

/// Data generating process with a kinked assignment rule:
///   Y = alpha0 + alpha1 X + alpha2 X^2 + beta1 D + (gamma0 + gamma1 D) U
///   D = 1{ 2 1{X>=0} X - X - 1 >= V }
/// with (X, U, V) trivariate normal under the configured covariance.
struct DgpConfig {
    double alpha0 = 1.0, alpha1 = 0.1, alpha2 = 0.01;
    double beta1 = 0.0;
    double gamma0 = 1.0, gamma1 = 0.0;
    double sigma_x = 1.0, sigma_u = 1.0, sigma_v = 1.0;
    double rho_xu = 0.5, rho_xv = 0.5, rho_uv = 0.5;
};

/// Assignment rule h(x) = 2 1{x>=0} x - x - 1; kink of magnitude 2 at 0.
double assignment_threshold(double x);

/// Lower-triangular Cholesky factor of the (X,U,V) covariance; throws
/// NotPositiveDefinite when the configuration is invalid.
std::array<std::array<double, 3>, 3> dgp_cholesky(const DgpConfig& cfg);

Sample draw_sample(const DgpConfig& cfg, std::size_t n, std::uint64_t seed);

struct ConditionalLaw {
    double mean = 0.0;
    double sd = 0.0;
};

/// Law of U given (X, V) = (0, h(0)), by the conditional-normal 2x2 solve.
ConditionalLaw compliance_conditional_u(const DgpConfig& cfg);

/// tau(theta) = beta1 + gamma1 * Q_{U | X=0, V=h(0)}(theta).
double true_qte(const DgpConfig& cfg, double theta);

struct CoverageCell {
    std::size_t n = 500;
    double beta1 = 0.0;
    double gamma1 = 0.0;
};

struct CellResult {
    CoverageCell cell;
    int reps = 0;
    int failures = 0;
    long accept_ts = 0;
    long accept_th = 0;
    bool flagged = false;  // more than 2% of replications failed

    double accept_rate_ts() const;
    double accept_rate_th() const;
};

struct McResult {
    std::vector<CellResult> cells;
    int reps = 0;
    int B = 0;
    double alpha = 0.05;
    std::uint64_t seed = 0;
};

/// Monte Carlo coverage harness: per cell, draw `reps` samples, run the full
/// pipeline, and tally acceptances of both tests at level alpha.
/// Replications run on deterministic substreams keyed by (n, rep) only, so
/// cells differing in (beta1, gamma1) share draws and results do not depend
/// on thread count or execution order.
McResult run_coverage(const DgpConfig& base, std::span<const CoverageCell> cells, int reps, int B,
                      double alpha, std::uint64_t seed, const PipelineOptions& pipeline,
                      int threads, Warnings* warnings = nullptr);

/// Fixed-width text table of acceptance frequencies: one column per
/// (beta1, gamma1) pair, two rows (significance / homogeneity) per n.
std::string format_coverage_table(const McResult& result);

/// CSV of per-cell results.
std::string coverage_csv(const McResult& result);

}  // namespace kinkqte
