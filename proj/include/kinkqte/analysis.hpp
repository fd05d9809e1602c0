#pragma once

#include <cstdint>
#include <string>

#include "kinkqte/bandwidth.hpp"
#include "kinkqte/bootstrap.hpp"
#include "kinkqte/density.hpp"
#include "kinkqte/types.hpp"
#include "kinkqte/wald_qte.hpp"

namespace kinkqte {

inline constexpr const char* kVersion = "0.1.0";

/// Outcome-direction smoothing for the conditional density estimator, as a
/// multiple of Silverman's rule on Y.
inline constexpr double kDensityBFactor = 3.0;

/// Everything the estimation pipeline needs beyond the data.
struct PipelineOptions {
    KernelSpec kernel;
    BandwidthOverrides bandwidths;
    double theta_a = 0.1;
    std::size_t y_grid_size = 101;
    std::size_t theta_grid_size = 41;
    double y_trim_p = 0.02;
    double y_pad_frac = 0.1;
    int B = 500;
    double alpha = 0.05;
    std::uint64_t seed = 1;
    double density_floor = kDefaultDensityFloor;
    double tol_denominator = kDefaultTolDenominator;
    int threads = 1;
    bool store_processes = false;
    bool with_bootstrap = true;
};

void validate_options(const PipelineOptions& opts);

struct PipelineResult {
    std::size_t n = 0;
    BandwidthSet bandwidths;
    std::vector<double> y_grid;
    std::vector<double> theta_grid;
    CdfProcess cdf1, cdf0;
    QteProcess qte;
    DensityEstimates densities;
    BootstrapRun boot;
    UniformBand band;
    Warnings warnings;
};

/// bandwidths -> first stage -> Wald CDFs -> QTE -> densities -> bootstrap.
PipelineResult run_pipeline(const Sample& sample, const PipelineOptions& opts);

/// Analysis configuration as seen by the CLI: pipeline options plus data
/// ingestion directives.
struct AnalysisConfig {
    PipelineOptions pipeline;
    double kink_location = 0.0;
    std::string outcome_column = "y";
    std::string treatment_column = "d";
    std::string running_column = "x";
};

/// JSON report with stable key order; byte-identical for identical inputs
/// (no timestamps). The config echo suffices to reproduce the run.
std::string report_json(const PipelineResult& result, const AnalysisConfig& config);

}  // namespace kinkqte
