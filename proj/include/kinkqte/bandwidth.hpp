#pragma once

#include <optional>
#include <span>

#include "kinkqte/first_stage.hpp"
#include "kinkqte/kernels.hpp"
#include "kinkqte/types.hpp"

namespace kinkqte {

/// Inputs to the pilot rule: per-side preliminary curvature of the joint
/// indicator regression and conditional variance bounds.
struct PreliminaryEstimates {
    double curvature_plus = 0.0;
    double curvature_minus = 0.0;
    double variance_plus = 0.25;
    double variance_minus = 0.25;
};

struct BandwidthIntermediates {
    double c0 = 0.0, c0_prime = 0.0;
    double c1 = 0.0, c1_prime = 0.0;
    double med_y_d0 = 0.0, med_y_d1 = 0.0;
    double curvature_plus = 0.0, curvature_minus = 0.0;  // pilot preliminaries
    double h0_rule = 0.0, h_rule = 0.0;                  // raw rule outputs before guardrails
    bool pilot_fallback = false;
    bool main_fallback = false;
    bool h0_clamped = false;
    bool h_clamped = false;
};

struct BandwidthSet {
    double c = 0.0;   // KDE bandwidth
    double h0 = 0.0;  // pilot bandwidth
    double h = 0.0;   // main (undersmoothed) bandwidth
    double fx0 = 0.0;
    BandwidthIntermediates intermediates;
};

struct BandwidthOverrides {
    std::optional<double> c, h0, h;
};

/// Silverman's rule 1.06 sd(X) n^(-1/5).
double silverman_bandwidth(std::span<const double> x);

/// Preliminary curvature from a global cubic fit of the response
/// 1{Y <= med(Y)} 1{D = 1} per side; variances fixed at the Bernoulli
/// bound 1/4.
PreliminaryEstimates preliminary_estimates(const Sample& sample);

/// Rate rules, exposed for the scale/rate properties:
/// ((3/2) cp / c^2)^(1/5) n^(-1/5) and ((3/2) cp / c^2)^(1/5) n^(-1/4).
double pilot_rule(double c0_prime, double c0, std::size_t n);
double main_rule(double c1_prime, double c1, std::size_t n);

/// Pilot bandwidth h0. Falls back to Silverman's rule (with a warning) when
/// the curvature term C0 vanishes; throws DegenerateVariance when the
/// variance term C0' is zero.
double pilot_bandwidth(const Sample& sample, KernelSpec spec, const PreliminaryEstimates& prelim,
                       double fx0, Warnings* warnings = nullptr,
                       BandwidthIntermediates* intermediates = nullptr);

/// Main bandwidth h from check fits at h0 and the variance estimator,
/// evaluated at the per-arm outcome medians. Falls back to the
/// rate-adjusted pilot h0 n^(-1/20) (with a warning) on a vanishing
/// curvature term.
double main_bandwidth(const Sample& sample, KernelSpec spec, double h0, double fx0,
                      Warnings* warnings = nullptr,
                      BandwidthIntermediates* intermediates = nullptr);

/// Stability window applied by select_bandwidths on top of the plug-in
/// rules. The plug-in curvature constants degenerate on designs whose
/// one-sided curvatures nearly cancel (the rules' denominators sit at
/// noise level), so the pipeline winsorizes the selected bandwidths into a
/// window expressed in units of sd(X), scaled at the main rule's n^(-1/4)
/// rate from the reference sample size 500:
///   h  in [h_lo, h_hi] * sd(X) * (n/500)^(-1/4)
///   h0 in [h0_lo, h0_hi] * h
/// The defaults pin both to the point the coverage study validates; the
/// raw rule outputs are kept in the intermediates. Overridden bandwidths
/// bypass the window.
struct BandwidthGuardrails {
    double h_lo = 3.0, h_hi = 3.0;      // times sd(X) (n/500)^(-1/4)
    double h0_lo = 1.4, h0_hi = 1.4;    // times the selected h
    bool enabled = true;
};

/// Full pipeline: Silverman c, kink density fx0, pilot h0, main h, with
/// optional overrides replacing the corresponding selector.
BandwidthSet select_bandwidths(const Sample& sample, KernelSpec spec,
                               const BandwidthOverrides& overrides, Warnings& warnings,
                               const BandwidthGuardrails& guardrails = {});

}  // namespace kinkqte
