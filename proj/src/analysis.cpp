#include "kinkqte/analysis.hpp"

#include <cmath>

#include <json.hpp>

namespace kinkqte {

void validate_options(const PipelineOptions& opts) {
    if (!(opts.alpha > 0.0 && opts.alpha < 1.0)) throw InputError("config: alpha must lie in (0,1)");
    if (!(opts.theta_a > 0.0 && opts.theta_a < 0.5)) {
        throw InputError("config: theta_a must lie in (0, 0.5)");
    }
    if (opts.y_grid_size < 2) throw InputError("config: y_grid_size must be at least 2");
    if (opts.theta_grid_size < 2) throw InputError("config: theta_grid_size must be at least 2");
    if (opts.with_bootstrap && opts.B < 100) throw InputError("config: B must be at least 100");
    if (!(opts.density_floor > 0.0)) throw InputError("config: density_floor must be positive");
    if (!(opts.tol_denominator > 0.0)) throw InputError("config: tol_denominator must be positive");
    if (opts.threads < 0) throw InputError("config: threads must be nonnegative");
}

PipelineResult run_pipeline(const Sample& sample, const PipelineOptions& opts) {
    validate_options(opts);
    if (sample.size() < 10) throw InputError("sample too small: need at least 10 observations");
    for (std::size_t i = 0; i < sample.size(); ++i) {
        if (sample.d[i] != 0 && sample.d[i] != 1) {
            throw NonBinaryTreatment("treatment must be 0 or 1 (observation " + std::to_string(i + 1) +
                                     ")");
        }
    }

    PipelineResult res;
    res.n = sample.size();
    res.bandwidths = select_bandwidths(sample, opts.kernel, opts.bandwidths, res.warnings);

    res.y_grid = make_y_grid(sample, res.bandwidths.h, opts.y_grid_size, opts.y_trim_p,
                             opts.y_pad_frac);
    res.theta_grid = make_theta_grid(opts.theta_a, opts.theta_grid_size);

    FirstStageModel first_stage = fit_first_stage(sample, res.y_grid, res.bandwidths.h, opts.kernel);
    res.cdf1 = wald_cdf_from_first_stage(first_stage, 1, opts.tol_denominator);
    res.cdf0 = wald_cdf_from_first_stage(first_stage, 0, opts.tol_denominator);
    res.qte = qte_process(res.cdf1, res.cdf0, res.theta_grid);
    if (res.qte.grid_too_narrow) {
        res.warnings.push_back(
            {WarningCode::grid_too_narrow, "a quantile landed on the outcome grid edge"});
    }

    // Density smoothing defaults: a = pilot bandwidth, b = an oversmoothed
    // Silverman-type outcome bandwidth. The floor recedes with n.
    double b = kDensityBFactor * silverman_bandwidth(sample.y);
    double floor_std = density_floor_at(opts.density_floor, sample.size());
    res.densities = estimate_densities(sample, res.y_grid, res.bandwidths.fx0, res.bandwidths.h0,
                                       b, res.bandwidths.h, opts.kernel, floor_std,
                                       opts.tol_denominator);

    if (opts.with_bootstrap) {
        res.boot = run_bootstrap(sample, first_stage, res.cdf1, res.cdf0, res.densities, res.qte,
                                 res.bandwidths.h, opts.kernel, opts.B, opts.alpha, opts.seed,
                                 opts.threads, opts.store_processes);
        if (res.boot.degenerate_density_used) {
            res.warnings.push_back({WarningCode::degenerate_density,
                                    "a floored conditional density entered the bootstrap process"});
        }
        res.band = uniform_bands(res.qte, res.boot.ts.crit, res.boot.rate);
    }
    return res;
}

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json json_vector(const std::vector<double>& v) { return ordered_json(v); }

ordered_json test_json(const TestResult& t) {
    ordered_json j;
    j["stat"] = t.stat;
    j["crit"] = t.crit;
    j["p"] = t.p;
    j["reject"] = t.reject;
    return j;
}

}  // namespace

std::string report_json(const PipelineResult& res, const AnalysisConfig& config) {
    const PipelineOptions& opts = config.pipeline;
    ordered_json j;
    j["version"] = kVersion;
    j["n"] = res.n;

    ordered_json cfg;
    cfg["kernel"] = kernel_name(opts.kernel.kind);
    cfg["kink_location"] = config.kink_location;
    cfg["columns"] = {{"outcome", config.outcome_column},
                      {"treatment", config.treatment_column},
                      {"running", config.running_column}};
    ordered_json bw_over;
    bw_over["c"] = opts.bandwidths.c.has_value() ? ordered_json(*opts.bandwidths.c) : nullptr;
    bw_over["h0"] = opts.bandwidths.h0.has_value() ? ordered_json(*opts.bandwidths.h0) : nullptr;
    bw_over["h"] = opts.bandwidths.h.has_value() ? ordered_json(*opts.bandwidths.h) : nullptr;
    cfg["bandwidth_overrides"] = bw_over;
    cfg["theta_a"] = opts.theta_a;
    cfg["y_grid_size"] = opts.y_grid_size;
    cfg["theta_grid_size"] = opts.theta_grid_size;
    cfg["y_trim_p"] = opts.y_trim_p;
    cfg["y_pad_frac"] = opts.y_pad_frac;
    cfg["B"] = opts.B;
    cfg["alpha"] = opts.alpha;
    cfg["seed"] = opts.seed;
    cfg["density_floor"] = opts.density_floor;
    cfg["tol_denominator"] = opts.tol_denominator;
    j["config"] = cfg;

    ordered_json bw;
    bw["c"] = res.bandwidths.c;
    bw["h0"] = res.bandwidths.h0;
    bw["h"] = res.bandwidths.h;
    bw["fx0"] = res.bandwidths.fx0;
    ordered_json inter;
    inter["c0"] = res.bandwidths.intermediates.c0;
    inter["c0_prime"] = res.bandwidths.intermediates.c0_prime;
    inter["c1"] = res.bandwidths.intermediates.c1;
    inter["c1_prime"] = res.bandwidths.intermediates.c1_prime;
    inter["med_y_d0"] = res.bandwidths.intermediates.med_y_d0;
    inter["med_y_d1"] = res.bandwidths.intermediates.med_y_d1;
    inter["pilot_curvature_plus"] = res.bandwidths.intermediates.curvature_plus;
    inter["pilot_curvature_minus"] = res.bandwidths.intermediates.curvature_minus;
    inter["pilot_fallback"] = res.bandwidths.intermediates.pilot_fallback;
    inter["main_fallback"] = res.bandwidths.intermediates.main_fallback;
    bw["intermediates"] = inter;
    j["bandwidths"] = bw;

    ordered_json fs;
    fs["kink_slope_diff_d1"] = res.cdf1.denominator_slope_diff;
    fs["kink_slope_diff_d0"] = res.cdf0.denominator_slope_diff;
    fs["weak_kink_margin"] =
        std::fabs(res.cdf1.denominator_slope_diff) / opts.tol_denominator;
    fs["tol_denominator"] = opts.tol_denominator;
    j["first_stage"] = fs;

    for (const CdfProcess* cdf : {&res.cdf1, &res.cdf0}) {
        ordered_json c;
        c["d"] = cdf->d;
        c["y_grid"] = json_vector(cdf->y_grid);
        c["values_raw"] = json_vector(cdf->values_raw);
        c["values"] = json_vector(cdf->values);
        j[cdf->d == 1 ? "cdf1" : "cdf0"] = c;
    }

    ordered_json q;
    q["theta_grid"] = json_vector(res.qte.theta_grid);
    q["tau"] = json_vector(res.qte.tau);
    q["q1"] = json_vector(res.qte.q1);
    q["q0"] = json_vector(res.qte.q0);
    j["qte"] = q;

    ordered_json dens;
    dens["fx0"] = res.densities.fx0;
    dens["floor_value"] = res.densities.floor_value;
    dens["bandwidth_a"] = res.densities.bandwidth_a;
    dens["bandwidth_b"] = res.densities.bandwidth_b;
    dens["f1"] = json_vector(res.densities.f_cond[1]);
    dens["f0"] = json_vector(res.densities.f_cond[0]);
    j["densities"] = dens;

    ordered_json boot;
    boot["B"] = res.boot.B;
    boot["alpha"] = res.boot.alpha;
    boot["seed"] = res.boot.seed;
    boot["rate"] = res.boot.rate;
    j["bootstrap"] = boot;

    ordered_json tests;
    tests["significance"] = test_json(res.boot.ts);
    tests["homogeneity"] = test_json(res.boot.th);
    j["tests"] = tests;

    ordered_json band;
    band["half_width"] = res.band.half_width;
    band["lo"] = json_vector(res.band.lo);
    band["hi"] = json_vector(res.band.hi);
    j["band"] = band;

    ordered_json warn = ordered_json::array();
    for (const Warning& w : res.warnings) {
        ordered_json e;
        e["code"] = warning_name(w.code);
        e["detail"] = w.detail;
        warn.push_back(e);
    }
    j["warnings"] = warn;

    return j.dump(2) + "\n";
}

}  // namespace kinkqte
