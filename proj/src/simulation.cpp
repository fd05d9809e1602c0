#include "kinkqte/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "kinkqte/parallel.hpp"
#include "kinkqte/rng.hpp"

namespace kinkqte {

double assignment_threshold(double x) { return 2.0 * (x >= 0.0 ? x : 0.0) - x - 1.0; }

std::array<std::array<double, 3>, 3> dgp_cholesky(const DgpConfig& cfg) {
    for (double rho : {cfg.rho_xu, cfg.rho_xv, cfg.rho_uv}) {
        if (!(rho > -1.0 && rho < 1.0)) {
            throw NotPositiveDefinite("DGP correlations must lie in (-1, 1)");
        }
    }
    for (double sig : {cfg.sigma_x, cfg.sigma_u, cfg.sigma_v}) {
        if (!(sig > 0.0)) throw NotPositiveDefinite("DGP standard deviations must be positive");
    }
    std::array<std::array<double, 3>, 3> cov{};
    cov[0][0] = cfg.sigma_x * cfg.sigma_x;
    cov[1][1] = cfg.sigma_u * cfg.sigma_u;
    cov[2][2] = cfg.sigma_v * cfg.sigma_v;
    cov[0][1] = cov[1][0] = cfg.rho_xu * cfg.sigma_x * cfg.sigma_u;
    cov[0][2] = cov[2][0] = cfg.rho_xv * cfg.sigma_x * cfg.sigma_v;
    cov[1][2] = cov[2][1] = cfg.rho_uv * cfg.sigma_u * cfg.sigma_v;

    std::array<std::array<double, 3>, 3> l{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = cov[i][j];
            for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
            if (i == j) {
                if (!(s > 0.0)) {
                    throw NotPositiveDefinite("DGP covariance matrix is not positive definite");
                }
                l[i][i] = std::sqrt(s);
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    return l;
}

Sample draw_sample(const DgpConfig& cfg, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw InputError("draw_sample: n must be at least 1");
    auto l = dgp_cholesky(cfg);
    Sample s;
    s.y.resize(n);
    s.x.resize(n);
    s.d.resize(n);
    rng::NormalStream stream(seed);
    for (std::size_t i = 0; i < n; ++i) {
        double z0 = stream.next();
        double z1 = stream.next();
        double z2 = stream.next();
        double x = l[0][0] * z0;
        double u = l[1][0] * z0 + l[1][1] * z1;
        double v = l[2][0] * z0 + l[2][1] * z1 + l[2][2] * z2;
        int d = assignment_threshold(x) >= v ? 1 : 0;
        s.x[i] = x;
        s.d[i] = static_cast<std::int8_t>(d);
        s.y[i] = cfg.alpha0 + cfg.alpha1 * x + cfg.alpha2 * x * x + cfg.beta1 * d +
                 (cfg.gamma0 + cfg.gamma1 * d) * u;
    }
    return s;
}

ConditionalLaw compliance_conditional_u(const DgpConfig& cfg) {
    // Condition U on (X, V) = (0, h(0)) with h(0) = -1.
    double sxx = cfg.sigma_x * cfg.sigma_x;
    double svv = cfg.sigma_v * cfg.sigma_v;
    double sxv = cfg.rho_xv * cfg.sigma_x * cfg.sigma_v;
    double sux = cfg.rho_xu * cfg.sigma_x * cfg.sigma_u;
    double suv = cfg.rho_uv * cfg.sigma_u * cfg.sigma_v;

    double det = sxx * svv - sxv * sxv;
    if (!(det > 0.0)) throw NotPositiveDefinite("conditioning block is singular");
    // weights = Sigma_{U,(X,V)} Sigma_{(X,V)}^{-1}
    double w_x = (sux * svv - suv * sxv) / det;
    double w_v = (suv * sxx - sux * sxv) / det;
    double target_v = assignment_threshold(0.0);  // = -1
    ConditionalLaw law;
    law.mean = w_x * 0.0 + w_v * target_v;
    double var = cfg.sigma_u * cfg.sigma_u - (w_x * sux + w_v * suv);
    law.sd = std::sqrt(std::max(0.0, var));
    return law;
}

double true_qte(const DgpConfig& cfg, double theta) {
    if (!(theta > 0.0 && theta < 1.0)) throw InputError("true_qte: theta must lie in (0,1)");
    ConditionalLaw law = compliance_conditional_u(cfg);
    return cfg.beta1 + cfg.gamma1 * (law.mean + law.sd * rng::normal_quantile(theta));
}

double CellResult::accept_rate_ts() const {
    int ok = reps - failures;
    return ok > 0 ? static_cast<double>(accept_ts) / ok : 0.0;
}

double CellResult::accept_rate_th() const {
    int ok = reps - failures;
    return ok > 0 ? static_cast<double>(accept_th) / ok : 0.0;
}

McResult run_coverage(const DgpConfig& base, std::span<const CoverageCell> cells, int reps, int B,
                      double alpha, std::uint64_t seed, const PipelineOptions& pipeline,
                      int threads, Warnings* warnings) {
    if (reps < 1) throw InputError("run_coverage: reps must be at least 1");
    if (B < 100) throw InputError("run_coverage: B must be at least 100");
    McResult result;
    result.reps = reps;
    result.B = B;
    result.alpha = alpha;
    result.seed = seed;

    for (const CoverageCell& cell : cells) {
        DgpConfig cfg = base;
        cfg.beta1 = cell.beta1;
        cfg.gamma1 = cell.gamma1;

        // Substreams keyed by (n, rep) only: cells that differ in
        // (beta1, gamma1) reuse the same underlying draws.
        std::uint64_t sample_master = rng::substream_seed(seed, rng::salt_sim_sample, cell.n);
        std::uint64_t boot_master = rng::substream_seed(seed, rng::salt_sim_bootstrap, cell.n);

        std::vector<std::uint8_t> ok(static_cast<std::size_t>(reps), 0);
        std::vector<std::uint8_t> acc_ts(static_cast<std::size_t>(reps), 0);
        std::vector<std::uint8_t> acc_th(static_cast<std::size_t>(reps), 0);

        parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t rep) {
            PipelineOptions opts = pipeline;
            opts.B = B;
            opts.alpha = alpha;
            opts.seed = rng::substream_seed(boot_master, rng::salt_rep, rep);
            opts.threads = 1;
            opts.store_processes = false;
            opts.with_bootstrap = true;
            try {
                Sample s = draw_sample(cfg, cell.n,
                                       rng::substream_seed(sample_master, rng::salt_rep, rep));
                PipelineResult pr = run_pipeline(s, opts);
                ok[rep] = 1;
                acc_ts[rep] = pr.boot.ts.reject ? 0 : 1;
                acc_th[rep] = pr.boot.th.reject ? 0 : 1;
            } catch (const Error&) {
                // counted as a failed replication
            }
        });

        CellResult cr;
        cr.cell = cell;
        cr.reps = reps;
        for (std::size_t r = 0; r < static_cast<std::size_t>(reps); ++r) {
            if (ok[r] == 0) {
                ++cr.failures;
            } else {
                cr.accept_ts += acc_ts[r];
                cr.accept_th += acc_th[r];
            }
        }
        cr.flagged = cr.failures * 50 > reps;  // > 2%
        if (cr.flagged && warnings != nullptr) {
            warnings->push_back({WarningCode::cell_failures,
                                 "cell n=" + std::to_string(cell.n) + " beta1=" +
                                     std::to_string(cell.beta1) + " gamma1=" +
                                     std::to_string(cell.gamma1) + " had " +
                                     std::to_string(cr.failures) + " failed replications"});
        }
        result.cells.push_back(cr);
    }
    return result;
}

namespace {

std::string fmt(double v, int prec = 3) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
    return buf;
}

}  // namespace

std::string format_coverage_table(const McResult& result) {
    // Columns: (beta1, gamma1) pairs in first-seen order; row pairs per n.
    std::vector<std::pair<double, double>> params;
    std::vector<std::size_t> ns;
    for (const CellResult& c : result.cells) {
        std::pair<double, double> p{c.cell.beta1, c.cell.gamma1};
        if (std::find(params.begin(), params.end(), p) == params.end()) params.push_back(p);
        if (std::find(ns.begin(), ns.end(), c.cell.n) == ns.end()) ns.push_back(c.cell.n);
    }
    auto find_cell = [&](std::size_t n, std::pair<double, double> p) -> const CellResult* {
        for (const CellResult& c : result.cells) {
            if (c.cell.n == n && c.cell.beta1 == p.first && c.cell.gamma1 == p.second) return &c;
        }
        return nullptr;
    };

    std::ostringstream os;
    os << "Acceptance frequencies (nominal " << fmt(1.0 - result.alpha, 2) << "), reps="
       << result.reps << ", B=" << result.B << ", seed=" << result.seed << "\n\n";
    os << "                          ";
    for (auto& p : params) os << "  b1=" << fmt(p.first, 2) << " g1=" << fmt(p.second, 2);
    os << "\n";
    for (std::size_t n : ns) {
        for (int row = 0; row < 2; ++row) {
            char head[64];
            if (row == 0) {
                std::snprintf(head, sizeof(head), "n=%6zu  Significance  ", n);
            } else {
                std::snprintf(head, sizeof(head), "          Homogeneity   ");
            }
            os << head;
            for (auto& p : params) {
                const CellResult* c = find_cell(n, p);
                if (c == nullptr) {
                    os << "             --";
                    continue;
                }
                double v = row == 0 ? c->accept_rate_ts() : c->accept_rate_th();
                char cellbuf[32];
                std::snprintf(cellbuf, sizeof(cellbuf), "        %s%s", fmt(v).c_str(),
                              c->flagged ? "*" : " ");
                os << cellbuf;
            }
            os << "\n";
        }
    }
    bool any_flagged = false;
    for (const CellResult& c : result.cells) any_flagged = any_flagged || c.flagged;
    if (any_flagged) os << "\n* more than 2% of replications failed in this cell\n";
    return os.str();
}

std::string coverage_csv(const McResult& result) {
    std::ostringstream os;
    os << "n,beta1,gamma1,reps,failures,accept_significance,accept_homogeneity,B,alpha,seed\n";
    char buf[256];
    for (const CellResult& c : result.cells) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%d,%d,%.17g,%.17g,%d,%.17g,%llu\n",
                      c.cell.n, c.cell.beta1, c.cell.gamma1, c.reps, c.failures,
                      c.accept_rate_ts(), c.accept_rate_th(), result.B, result.alpha,
                      static_cast<unsigned long long>(result.seed));
        os << buf;
    }
    return os.str();
}

}  // namespace kinkqte
