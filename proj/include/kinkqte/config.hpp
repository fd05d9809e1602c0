#pragma once

#include <map>
#include <string>

#include "kinkqte/analysis.hpp"

namespace kinkqte {

/// Flat key = value configuration file ('#' comments, optional quotes).
std::map<std::string, std::string> parse_config_file(const std::string& path);

/// Apply parsed keys onto an AnalysisConfig; unknown keys raise InputError.
void apply_config_entries(AnalysisConfig& config,
                          const std::map<std::string, std::string>& entries);

/// Default seed from the KINKQTE_SEED environment variable, when set.
void apply_env_seed(AnalysisConfig& config);

}  // namespace kinkqte
