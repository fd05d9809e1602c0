#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "kinkqte/density.hpp"
#include "kinkqte/first_stage.hpp"
#include "kinkqte/kernels.hpp"
#include "kinkqte/types.hpp"
#include "kinkqte/wald_qte.hpp"

namespace kinkqte {

/// One multiplier draw of the estimated multiplier processes:
/// nu1[side][d] over the first-stage y-grid, nu2[side][d] (y-free).
/// side 0 = plus, 1 = minus.
struct EmpDraw {
    std::array<std::array<std::vector<double>, 2>, 2> nu1;
    std::array<std::array<double, 2>, 2> nu2{};

    double nu1_diff(std::size_t y_idx, int d) const {
        return nu1[0][static_cast<std::size_t>(d)][y_idx] -
               nu1[1][static_cast<std::size_t>(d)][y_idx];
    }
    double nu2_diff(int d) const {
        return nu2[0][static_cast<std::size_t>(d)] - nu2[1][static_cast<std::size_t>(d)];
    }
};

/// Precomputed machinery for multiplier draws on a fixed dataset and
/// first-stage fit: per-side influence weights, outcome-sorted prefix
/// structures per treatment arm, and the clipped mu2 evaluations. Each
/// draw() is O(n + grid) and thread-safe.
///
/// The influence weights come from the exact multiplier representation of
/// the weighted least squares slope: sqrt(n h^3) times the slope row of the
/// inverse empirical normal matrix, applied to the perturbed score. This is
/// the finite-sample version of the asymptotic multiplier process (whose
/// weights replace the empirical normal matrix by its limit f_X(0) Gamma);
/// the two agree as h shrinks, and the exact form keeps the draws aligned
/// with the estimator at the bandwidths the selectors actually produce.
class EmpEngine {
  public:
    EmpEngine(const Sample& sample, const FirstStageModel& first_stage, double h, KernelSpec spec);

    /// Multiplier process values for one vector of multipliers (length n).
    EmpDraw draw(std::span<const double> xi) const;

    std::size_t sample_size() const { return n_; }

  private:
    struct SideData {
        std::vector<int> idx;        // sample indices in the window
        std::vector<double> weight;  // sqrt(nh) e1' M^{-1} r(x/h) K(x/h), M the normal matrix
        std::vector<double> x;       // raw x
        std::vector<double> x2;      // x^2
        std::array<std::vector<double>, 2> mu2_clip;  // clipped mu2 values per d
        struct Group {                                 // per treatment arm
            std::vector<std::size_t> order;            // window positions sorted by Y
            std::vector<std::size_t> grid_count;       // members with Y <= y_grid[g]
        };
        std::array<Group, 2> group;
    };

    std::size_t n_ = 0;
    std::size_t grid_size_ = 0;
    std::array<SideData, 2> side_;                              // 0 = plus, 1 = minus
    std::array<std::array<std::vector<FitTriple>, 2>, 2> mu1_;  // [side][d] over grid
};

/// Convenience wrapper around EmpEngine for a single draw.
EmpDraw emp_draw(const Sample& sample, const FirstStageModel& first_stage, double h,
                 KernelSpec spec, std::span<const double> xi);

/// Delta-method process on the theta grid:
/// Xi(theta) = -[ Zhat(Q1(theta),1)/f1(Q1(theta)) - Zhat(Q0(theta),0)/f0(Q0(theta)) ],
/// with Zhat assembled from the slope differences and EMP differences and
/// evaluated at the grid points the quantiles landed on.
std::vector<double> xi_process(const CdfProcess& cdf1, const CdfProcess& cdf0, const EmpDraw& emp,
                               const DensityEstimates& densities, const QteProcess& qte);

struct TestResult {
    double stat = 0.0;
    double crit = 0.0;
    double p = 1.0;
    bool reject = false;
};

struct BootstrapRun {
    int B = 0;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    double rate = 0.0;  // sqrt(n h^3)
    std::vector<double> sup_ts;  // sup |Xi| per draw
    std::vector<double> sup_th;  // sup |Xi - mean(Xi)| per draw
    TestResult ts, th;
    std::vector<std::vector<double>> xi_processes;  // kept when store_processes
    bool degenerate_density_used = false;
};

/// Weighted average over the theta grid (trapezoid weights, normalized), the
/// demeaning operator of the homogeneity test.
double theta_average(std::span<const double> values, std::span<const double> theta_grid);

/// Empirical critical value and p-value convention:
/// p = (1 + #{draws >= stat}) / (B + 1), crit = draw order statistic
/// floor((1-alpha)(B+1)) + 1, which makes  reject <=> stat > crit <=> p < alpha
/// exact, ties included.
TestResult sup_test(double stat, std::span<const double> sup_draws, double alpha);

/// Treatment significance: stat = sup |rate * tau|.
TestResult significance_test(const QteProcess& qte, std::span<const double> sup_ts, double rate,
                             double alpha);

/// Treatment homogeneity: stat = sup |rate * (tau - mean(tau))|.
TestResult homogeneity_test(const QteProcess& qte, std::span<const double> sup_th, double rate,
                            double alpha);

struct UniformBand {
    std::vector<double> lo, hi;
    double half_width = 0.0;  // crit / rate
};

UniformBand uniform_bands(const QteProcess& qte, double crit, double rate);

/// Full bootstrap pass: B multiplier draws on deterministic per-draw
/// substreams of `seed`, sup statistics, both tests, at level alpha.
BootstrapRun run_bootstrap(const Sample& sample, const FirstStageModel& first_stage,
                           const CdfProcess& cdf1, const CdfProcess& cdf0,
                           const DensityEstimates& densities, const QteProcess& qte, double h,
                           KernelSpec spec, int B, double alpha, std::uint64_t seed, int threads,
                           bool store_processes = false);

}  // namespace kinkqte
