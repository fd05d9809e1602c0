#pragma once

#include <span>
#include <string>
#include <vector>

#include "kinkqte/bootstrap.hpp"
#include "kinkqte/types.hpp"
#include "kinkqte/wald_qte.hpp"

namespace kinkqte {

struct ColumnMap {
    std::string outcome = "y";
    std::string treatment = "d";
    std::string running = "x";
};

/// Read a headed CSV into a Sample, recentering the running variable by
/// kink_location. The treatment column must contain exactly 0 or 1.
Sample ingest(const std::string& path, const ColumnMap& columns, double kink_location);

/// Two-column "grid,value" file.
std::string process_csv(std::span<const double> grid, std::span<const double> values);

/// "theta,tau,lo,hi" file for the QTE process with uniform bands.
std::string band_csv(const QteProcess& qte, const UniformBand& band);

void write_file(const std::string& path, const std::string& content);

}  // namespace kinkqte
