#include "kinkqte/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kinkqte/parallel.hpp"
#include "kinkqte/rng.hpp"

namespace kinkqte {

EmpEngine::EmpEngine(const Sample& sample, const FirstStageModel& first_stage, double h,
                     KernelSpec spec) {
    if (!(h > 0.0) || !std::isfinite(h)) {
        throw NonpositiveBandwidth("emp_draw: bandwidth must be positive");
    }
    n_ = sample.size();
    grid_size_ = first_stage.y_grid.size();
    // sqrt(n h^3) * slope / h-scaling: the scaled-basis slope row applied to
    // the score, then rescaled to per-unit-x units.
    const double scale = std::sqrt(static_cast<double>(n_) * h);

    for (int s = 0; s < 2; ++s) {
        Side side = s == 0 ? Side::plus : Side::minus;
        OneSidedDesign design(sample.x, side, h, spec, 2);
        const Vec3 z = design.slope_selector();
        SideData& sd = side_[static_cast<std::size_t>(s)];
        const auto& window = design.window();
        const auto& weight = design.weights();
        const auto& scaled = design.scaled_x();
        for (std::size_t k = 0; k < window.size(); ++k) {
            std::size_t i = static_cast<std::size_t>(window[k]);
            double u = scaled[k];
            sd.idx.push_back(window[k]);
            sd.weight.push_back(scale * (z[0] + z[1] * u + z[2] * u * u) * weight[k]);
            sd.x.push_back(sample.x[i]);
            sd.x2.push_back(sample.x[i] * sample.x[i]);
        }
        const std::size_t w = sd.idx.size();
        for (int d = 0; d < 2; ++d) {
            auto& clip = sd.mu2_clip[static_cast<std::size_t>(d)];
            clip.resize(w);
            for (std::size_t k = 0; k < w; ++k) {
                clip[k] = first_stage.mu2_value(sd.x[k], d);
            }
            auto& grp = sd.group[static_cast<std::size_t>(d)];
            for (std::size_t k = 0; k < w; ++k) {
                if (sample.d[static_cast<std::size_t>(sd.idx[k])] == d) grp.order.push_back(k);
            }
            std::sort(grp.order.begin(), grp.order.end(), [&](std::size_t a, std::size_t b) {
                double ya = sample.y[static_cast<std::size_t>(sd.idx[a])];
                double yb = sample.y[static_cast<std::size_t>(sd.idx[b])];
                if (ya != yb) return ya < yb;
                return a < b;
            });
            grp.grid_count.resize(grid_size_);
            std::size_t pos = 0;
            for (std::size_t g = 0; g < grid_size_; ++g) {
                double yg = first_stage.y_grid[g];
                while (pos < grp.order.size() &&
                       sample.y[static_cast<std::size_t>(sd.idx[grp.order[pos]])] <= yg) {
                    ++pos;
                }
                grp.grid_count[g] = pos;
            }
            mu1_[static_cast<std::size_t>(s)][static_cast<std::size_t>(d)] =
                first_stage.mu1[static_cast<std::size_t>(d)][static_cast<std::size_t>(s)];
        }
    }
}

EmpDraw EmpEngine::draw(std::span<const double> xi) const {
    if (xi.size() != n_) {
        throw LengthMismatch("emp_draw: multiplier vector length differs from sample size");
    }
    EmpDraw out;
    std::vector<double> t;        // xi_i * weight_i over the window
    std::vector<double> prefix;   // prefix sums of t in outcome order per group
    for (int s = 0; s < 2; ++s) {
        const SideData& sd = side_[static_cast<std::size_t>(s)];
        const std::size_t w = sd.idx.size();
        t.assign(w, 0.0);
        double s0 = 0.0, s1 = 0.0, s2 = 0.0;
        for (std::size_t k = 0; k < w; ++k) {
            double tk = xi[static_cast<std::size_t>(sd.idx[k])] * sd.weight[k];
            t[k] = tk;
            s0 += tk;
            s1 += tk * sd.x[k];
            s2 += tk * sd.x2[k];
        }
        for (int d = 0; d < 2; ++d) {
            const auto& grp = sd.group[static_cast<std::size_t>(d)];
            const auto& clip = sd.mu2_clip[static_cast<std::size_t>(d)];
            double arm_total = 0.0;
            for (std::size_t pos : grp.order) arm_total += t[pos];
            double mu2_term = 0.0;
            for (std::size_t k = 0; k < w; ++k) mu2_term += t[k] * clip[k];
            out.nu2[static_cast<std::size_t>(s)][static_cast<std::size_t>(d)] =
                arm_total - mu2_term;

            prefix.assign(grp.order.size() + 1, 0.0);
            for (std::size_t k = 0; k < grp.order.size(); ++k) {
                prefix[k + 1] = prefix[k] + t[grp.order[k]];
            }
            const auto& coeffs = mu1_[static_cast<std::size_t>(s)][static_cast<std::size_t>(d)];
            auto& nu = out.nu1[static_cast<std::size_t>(s)][static_cast<std::size_t>(d)];
            nu.resize(grid_size_);
            for (std::size_t g = 0; g < grid_size_; ++g) {
                const FitTriple& f = coeffs[g];
                double mu1_term = f.level * s0 + f.slope * s1 + 0.5 * f.curvature * s2;
                nu[g] = prefix[grp.grid_count[g]] - mu1_term;
            }
        }
    }
    return out;
}

EmpDraw emp_draw(const Sample& sample, const FirstStageModel& first_stage, double h,
                 KernelSpec spec, std::span<const double> xi) {
    EmpEngine engine(sample, first_stage, h, spec);
    return engine.draw(xi);
}

std::vector<double> xi_process(const CdfProcess& cdf1, const CdfProcess& cdf0, const EmpDraw& emp,
                               const DensityEstimates& densities, const QteProcess& qte) {
    const std::size_t m = qte.theta_grid.size();
    std::vector<double> xi(m);
    const CdfProcess* cdfs[2] = {&cdf0, &cdf1};
    for (std::size_t j = 0; j < m; ++j) {
        double z[2];
        for (int d = 0; d < 2; ++d) {
            const CdfProcess& cdf = *cdfs[d];
            std::size_t idx = d == 1 ? qte.q1_idx[j] : qte.q0_idx[j];
            double kappa = cdf.denominator_slope_diff;
            // The weight on the first-stage perturbation estimates
            // kappa * F(y) at y = Q_hat(theta); the monotonized CDF value is
            // the estimate of F the pipeline reports, and keeps this factor
            // in [0, |kappa|] where the raw ratio can stray far outside.
            double delta1 = kappa * cdf.values[idx];
            z[d] = (kappa * emp.nu1_diff(idx, d) - delta1 * emp.nu2_diff(d)) / (kappa * kappa);
        }
        double f1 = densities.f_cond[1][qte.q1_idx[j]];
        double f0 = densities.f_cond[0][qte.q0_idx[j]];
        xi[j] = -(z[1] / f1 - z[0] / f0);
    }
    return xi;
}

double theta_average(std::span<const double> values, std::span<const double> theta_grid) {
    const std::size_t m = values.size();
    if (m == 0 || theta_grid.size() != m) {
        throw LengthMismatch("theta_average: grid/value length mismatch");
    }
    if (m == 1) return values[0];
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        double w;
        if (j == 0) {
            w = 0.5 * (theta_grid[1] - theta_grid[0]);
        } else if (j == m - 1) {
            w = 0.5 * (theta_grid[m - 1] - theta_grid[m - 2]);
        } else {
            w = 0.5 * (theta_grid[j + 1] - theta_grid[j - 1]);
        }
        num += w * values[j];
        den += w;
    }
    return num / den;
}

TestResult sup_test(double stat, std::span<const double> sup_draws, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("sup_test: alpha must lie in (0,1)");
    const std::size_t b = sup_draws.size();
    TestResult out;
    out.stat = stat;
    std::size_t count_ge = 0;
    for (double s : sup_draws) {
        if (s >= stat) ++count_ge;
    }
    out.p = static_cast<double>(1 + count_ge) / static_cast<double>(b + 1);
    std::vector<double> sorted(sup_draws.begin(), sup_draws.end());
    std::sort(sorted.begin(), sorted.end());
    double pos = (1.0 - alpha) * static_cast<double>(b + 1);
    std::size_t k = static_cast<std::size_t>(std::floor(pos)) + 1;
    out.crit = k <= b ? sorted[k - 1] : std::numeric_limits<double>::infinity();
    out.reject = stat > out.crit;
    return out;
}

TestResult significance_test(const QteProcess& qte, std::span<const double> sup_ts, double rate,
                             double alpha) {
    double stat = 0.0;
    for (double tau : qte.tau) stat = std::max(stat, std::fabs(rate * tau));
    return sup_test(stat, sup_ts, alpha);
}

TestResult homogeneity_test(const QteProcess& qte, std::span<const double> sup_th, double rate,
                            double alpha) {
    double mean = theta_average(qte.tau, qte.theta_grid);
    double stat = 0.0;
    for (double tau : qte.tau) stat = std::max(stat, std::fabs(rate * (tau - mean)));
    return sup_test(stat, sup_th, alpha);
}

UniformBand uniform_bands(const QteProcess& qte, double crit, double rate) {
    UniformBand band;
    band.half_width = crit / rate;
    band.lo.resize(qte.tau.size());
    band.hi.resize(qte.tau.size());
    for (std::size_t j = 0; j < qte.tau.size(); ++j) {
        band.lo[j] = qte.tau[j] - band.half_width;
        band.hi[j] = qte.tau[j] + band.half_width;
    }
    return band;
}

BootstrapRun run_bootstrap(const Sample& sample, const FirstStageModel& first_stage,
                           const CdfProcess& cdf1, const CdfProcess& cdf0,
                           const DensityEstimates& densities, const QteProcess& qte, double h,
                           KernelSpec spec, int B, double alpha, std::uint64_t seed, int threads,
                           bool store_processes) {
    if (B < 100) throw InputError("bootstrap: B must be at least 100");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("bootstrap: alpha must lie in (0,1)");

    BootstrapRun run;
    run.B = B;
    run.alpha = alpha;
    run.seed = seed;
    run.rate = std::sqrt(static_cast<double>(sample.size()) * h * h * h);

    for (std::size_t j = 0; j < qte.theta_grid.size(); ++j) {
        if (densities.floored[1][qte.q1_idx[j]] != 0 || densities.floored[0][qte.q0_idx[j]] != 0) {
            run.degenerate_density_used = true;
            break;
        }
    }

    EmpEngine engine(sample, first_stage, h, spec);
    run.sup_ts.resize(static_cast<std::size_t>(B));
    run.sup_th.resize(static_cast<std::size_t>(B));
    if (store_processes) run.xi_processes.resize(static_cast<std::size_t>(B));

    parallel_for(static_cast<std::size_t>(B), threads, [&](std::size_t b) {
        std::vector<double> xi = rng::normal_vector(
            rng::substream_seed(seed, rng::salt_bootstrap_draw, b), sample.size());
        EmpDraw emp = engine.draw(xi);
        std::vector<double> proc = xi_process(cdf1, cdf0, emp, densities, qte);
        double sup_abs = 0.0;
        for (double v : proc) sup_abs = std::max(sup_abs, std::fabs(v));
        double mean = theta_average(proc, qte.theta_grid);
        double sup_dm = 0.0;
        for (double v : proc) sup_dm = std::max(sup_dm, std::fabs(v - mean));
        run.sup_ts[b] = sup_abs;
        run.sup_th[b] = sup_dm;
        if (store_processes) run.xi_processes[b] = std::move(proc);
    });

    run.ts = significance_test(qte, run.sup_ts, run.rate, alpha);
    run.th = homogeneity_test(qte, run.sup_th, run.rate, alpha);
    return run;
}

}  // namespace kinkqte
