#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace kinkqte {

/// Observed data: outcome Y, binary treatment D, running variable X.
/// X is assumed recentered so the kink sits at x = 0.
struct Sample {
    std::vector<double> y;
    std::vector<double> x;
    std::vector<std::int8_t> d;

    std::size_t size() const { return y.size(); }
};

enum class Side { plus, minus };

inline const char* side_name(Side s) { return s == Side::plus ? "plus" : "minus"; }

// Error taxonomy. The CLI maps InputError to exit code 2, DesignError to 3,
// anything else to 4.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InputError : Error {
    using Error::Error;
};

struct DesignError : Error {
    using Error::Error;
};

struct NonpositiveBandwidth : InputError {
    explicit NonpositiveBandwidth(const std::string& what) : InputError(what) {}
};

struct LengthMismatch : InputError {
    explicit LengthMismatch(const std::string& what) : InputError(what) {}
};

struct NotPositiveDefinite : InputError {
    explicit NotPositiveDefinite(const std::string& what) : InputError(what) {}
};

struct ParseError : InputError {
    explicit ParseError(const std::string& what) : InputError(what) {}
};

struct NonBinaryTreatment : InputError {
    explicit NonBinaryTreatment(const std::string& what) : InputError(what) {}
};

struct EmptyFile : InputError {
    explicit EmptyFile(const std::string& what) : InputError(what) {}
};

struct SingularDesign : DesignError {
    explicit SingularDesign(const std::string& what) : DesignError(what) {}
};

struct WeakKink : DesignError {
    double margin;  // |estimated first-stage slope difference|
    WeakKink(const std::string& what, double margin_) : DesignError(what), margin(margin_) {}
};

struct EmptyWindow : DesignError {
    explicit EmptyWindow(const std::string& what) : DesignError(what) {}
};

struct DegenerateX : DesignError {
    explicit DegenerateX(const std::string& what) : DesignError(what) {}
};

struct DegenerateVariance : DesignError {
    explicit DegenerateVariance(const std::string& what) : DesignError(what) {}
};

// Non-fatal conditions surfaced in the report.
enum class WarningCode {
    grid_too_narrow,
    degenerate_density,
    pilot_bandwidth_fallback,
    main_bandwidth_fallback,
    cell_failures,
};

inline const char* warning_name(WarningCode code) {
    switch (code) {
        case WarningCode::grid_too_narrow: return "GridTooNarrow";
        case WarningCode::degenerate_density: return "DegenerateDensity";
        case WarningCode::pilot_bandwidth_fallback: return "PilotBandwidthFallback";
        case WarningCode::main_bandwidth_fallback: return "MainBandwidthFallback";
        case WarningCode::cell_failures: return "CellFailures";
    }
    return "Unknown";
}

struct Warning {
    WarningCode code;
    std::string detail;
};

using Warnings = std::vector<Warning>;

}  // namespace kinkqte
