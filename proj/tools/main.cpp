// kinkqte command line: quantile treatment effect estimation and uniform
// bootstrap inference at a kinked assignment rule, plus the Monte Carlo
// coverage harness.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kinkqte/analysis.hpp"
#include "kinkqte/config.hpp"
#include "kinkqte/csv.hpp"
#include "kinkqte/simulation.hpp"

namespace {

using kinkqte::AnalysisConfig;
using ordered_json = nlohmann::ordered_json;

struct EstimateFlags {
    std::string data;
    std::string config_path;
    std::string out;
    std::string export_dir;
    std::optional<std::string> kernel;
    std::optional<double> kink_location;
    std::optional<std::string> col_outcome, col_treatment, col_running;
    std::optional<double> bw_c, bw_h0, bw_h;
    std::optional<double> theta_a, alpha, density_floor, tol_denominator;
    std::optional<std::size_t> y_grid_size, theta_grid_size;
    std::optional<int> B, threads;
    std::optional<std::uint64_t> seed;
};

AnalysisConfig build_config(const EstimateFlags& f) {
    AnalysisConfig cfg;
    kinkqte::apply_env_seed(cfg);
    if (!f.config_path.empty()) {
        kinkqte::apply_config_entries(cfg, kinkqte::parse_config_file(f.config_path));
    }
    auto& pl = cfg.pipeline;
    if (f.kernel) {
        auto kind = kinkqte::kernel_from_name(*f.kernel);
        if (!kind) throw kinkqte::InputError("unknown kernel '" + *f.kernel + "'");
        pl.kernel.kind = *kind;
    }
    if (f.kink_location) cfg.kink_location = *f.kink_location;
    if (f.col_outcome) cfg.outcome_column = *f.col_outcome;
    if (f.col_treatment) cfg.treatment_column = *f.col_treatment;
    if (f.col_running) cfg.running_column = *f.col_running;
    if (f.bw_c) pl.bandwidths.c = *f.bw_c;
    if (f.bw_h0) pl.bandwidths.h0 = *f.bw_h0;
    if (f.bw_h) pl.bandwidths.h = *f.bw_h;
    if (f.theta_a) pl.theta_a = *f.theta_a;
    if (f.alpha) pl.alpha = *f.alpha;
    if (f.density_floor) pl.density_floor = *f.density_floor;
    if (f.tol_denominator) pl.tol_denominator = *f.tol_denominator;
    if (f.y_grid_size) pl.y_grid_size = *f.y_grid_size;
    if (f.theta_grid_size) pl.theta_grid_size = *f.theta_grid_size;
    if (f.B) pl.B = *f.B;
    if (f.threads) pl.threads = *f.threads;
    if (f.seed) pl.seed = *f.seed;
    return cfg;
}

void add_estimate_flags(CLI::App* cmd, EstimateFlags& f, bool with_report_flags) {
    cmd->add_option("--data", f.data, "input CSV file")->required();
    cmd->add_option("--config", f.config_path, "flat key = value config file");
    if (with_report_flags) {
        cmd->add_option("--out", f.out, "write the JSON report here (default: stdout)");
        cmd->add_option("--export-dir", f.export_dir,
                        "write cdf1.csv, cdf0.csv, qte.csv, bands.csv into this directory");
    }
    cmd->add_option("--kernel", f.kernel, "uniform | triangular | epanechnikov");
    cmd->add_option("--kink-location", f.kink_location, "kink point of the running variable");
    cmd->add_option("--outcome-col", f.col_outcome, "outcome column name");
    cmd->add_option("--treatment-col", f.col_treatment, "treatment column name");
    cmd->add_option("--running-col", f.col_running, "running variable column name");
    cmd->add_option("--bandwidth-c", f.bw_c, "override the density bandwidth c");
    cmd->add_option("--bandwidth-h0", f.bw_h0, "override the pilot bandwidth h0");
    cmd->add_option("--bandwidth-h", f.bw_h, "override the main bandwidth h");
    cmd->add_option("--theta-a", f.theta_a, "quantile range is [a, 1-a]");
    cmd->add_option("--alpha", f.alpha, "test level");
    cmd->add_option("--B", f.B, "bootstrap draws");
    cmd->add_option("--seed", f.seed, "RNG seed (or env KINKQTE_SEED)");
    cmd->add_option("--threads", f.threads, "worker thread cap");
    cmd->add_option("--y-grid-size", f.y_grid_size, "outcome grid points");
    cmd->add_option("--theta-grid-size", f.theta_grid_size, "quantile grid points");
    cmd->add_option("--density-floor", f.density_floor,
                    "conditional density floor (unit-variance outcome scale)");
    cmd->add_option("--tol-denominator", f.tol_denominator, "weak-kink tolerance");
}

int run_estimate(const EstimateFlags& flags) {
    AnalysisConfig cfg = build_config(flags);
    cfg.pipeline.store_processes = false;
    kinkqte::Sample sample = kinkqte::ingest(
        flags.data,
        kinkqte::ColumnMap{cfg.outcome_column, cfg.treatment_column, cfg.running_column},
        cfg.kink_location);
    kinkqte::PipelineResult result = kinkqte::run_pipeline(sample, cfg.pipeline);
    std::string json = kinkqte::report_json(result, cfg);
    if (flags.out.empty()) {
        std::cout << json;
    } else {
        kinkqte::write_file(flags.out, json);
    }
    if (!flags.export_dir.empty()) {
        const std::string dir = flags.export_dir + "/";
        kinkqte::write_file(dir + "cdf1.csv",
                            kinkqte::process_csv(result.cdf1.y_grid, result.cdf1.values));
        kinkqte::write_file(dir + "cdf0.csv",
                            kinkqte::process_csv(result.cdf0.y_grid, result.cdf0.values));
        kinkqte::write_file(dir + "qte.csv",
                            kinkqte::process_csv(result.qte.theta_grid, result.qte.tau));
        kinkqte::write_file(dir + "bands.csv", kinkqte::band_csv(result.qte, result.band));
    }
    return 0;
}

int run_bandwidth(const EstimateFlags& flags) {
    AnalysisConfig cfg = build_config(flags);
    kinkqte::Sample sample = kinkqte::ingest(
        flags.data,
        kinkqte::ColumnMap{cfg.outcome_column, cfg.treatment_column, cfg.running_column},
        cfg.kink_location);
    kinkqte::Warnings warnings;
    kinkqte::BandwidthSet set = kinkqte::select_bandwidths(sample, cfg.pipeline.kernel,
                                                           cfg.pipeline.bandwidths, warnings);
    ordered_json j;
    j["c"] = set.c;
    j["h0"] = set.h0;
    j["h"] = set.h;
    j["fx0"] = set.fx0;
    j["c0"] = set.intermediates.c0;
    j["c0_prime"] = set.intermediates.c0_prime;
    j["c1"] = set.intermediates.c1;
    j["c1_prime"] = set.intermediates.c1_prime;
    j["med_y_d0"] = set.intermediates.med_y_d0;
    j["med_y_d1"] = set.intermediates.med_y_d1;
    j["pilot_fallback"] = set.intermediates.pilot_fallback;
    j["main_fallback"] = set.intermediates.main_fallback;
    std::cout << j.dump(2) << "\n";
    for (const kinkqte::Warning& w : warnings) {
        std::cerr << "warning: " << kinkqte::warning_name(w.code) << ": " << w.detail << "\n";
    }
    return 0;
}

struct SimulateFlags {
    std::vector<std::size_t> ns{500};
    std::vector<double> beta1s{0.0};
    std::vector<double> gamma1s{0.0};
    int reps = 500;
    int B = 500;
    double alpha = 0.05;
    std::optional<std::uint64_t> seed;
    int threads = 1;
    std::optional<std::string> kernel;
    std::string csv_path;
};

int run_simulate(const SimulateFlags& flags) {
    kinkqte::PipelineOptions popts;
    if (flags.kernel) {
        auto kind = kinkqte::kernel_from_name(*flags.kernel);
        if (!kind) throw kinkqte::InputError("unknown kernel '" + *flags.kernel + "'");
        popts.kernel.kind = *kind;
    }
    AnalysisConfig env_cfg;
    kinkqte::apply_env_seed(env_cfg);
    std::uint64_t seed = flags.seed.value_or(env_cfg.pipeline.seed);

    std::vector<kinkqte::CoverageCell> cells;
    for (std::size_t n : flags.ns) {
        for (double b1 : flags.beta1s) {
            for (double g1 : flags.gamma1s) {
                cells.push_back(kinkqte::CoverageCell{n, b1, g1});
            }
        }
    }
    kinkqte::Warnings warnings;
    kinkqte::McResult result =
        kinkqte::run_coverage(kinkqte::DgpConfig{}, cells, flags.reps, flags.B, flags.alpha, seed,
                              popts, flags.threads, &warnings);
    std::cout << kinkqte::format_coverage_table(result);
    if (!flags.csv_path.empty()) {
        kinkqte::write_file(flags.csv_path, kinkqte::coverage_csv(result));
    }
    for (const kinkqte::Warning& w : warnings) {
        std::cerr << "warning: " << kinkqte::warning_name(w.code) << ": " << w.detail << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantile treatment effects at a kinked assignment rule"};
    app.require_subcommand(1);

    EstimateFlags est_flags;
    CLI::App* est = app.add_subcommand("estimate", "estimate QTEs and run the bootstrap tests");
    add_estimate_flags(est, est_flags, true);

    EstimateFlags bw_flags;
    CLI::App* bw = app.add_subcommand("bandwidth", "run the bandwidth selectors only");
    add_estimate_flags(bw, bw_flags, false);

    SimulateFlags sim_flags;
    CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo coverage harness");
    sim->add_option("--n", sim_flags.ns, "sample sizes");
    sim->add_option("--beta1", sim_flags.beta1s, "treatment level coefficients");
    sim->add_option("--gamma1", sim_flags.gamma1s, "treatment heterogeneity coefficients");
    sim->add_option("--reps", sim_flags.reps, "Monte Carlo replications per cell");
    sim->add_option("--B", sim_flags.B, "bootstrap draws per replication");
    sim->add_option("--alpha", sim_flags.alpha, "test level");
    sim->add_option("--seed", sim_flags.seed, "RNG seed (or env KINKQTE_SEED)");
    sim->add_option("--threads", sim_flags.threads, "worker thread cap");
    sim->add_option("--kernel", sim_flags.kernel, "uniform | triangular | epanechnikov");
    sim->add_option("--csv", sim_flags.csv_path, "write per-cell results CSV here");

    CLI::App* ver = app.add_subcommand("version", "print the version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (est->parsed()) return run_estimate(est_flags);
        if (bw->parsed()) return run_bandwidth(bw_flags);
        if (sim->parsed()) return run_simulate(sim_flags);
        if (ver->parsed()) {
            std::cout << "kinkqte " << kinkqte::kVersion << "\n";
            return 0;
        }
    } catch (const kinkqte::InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const kinkqte::DesignError& e) {
        std::cerr << "design failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
