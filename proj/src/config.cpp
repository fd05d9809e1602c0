#include "kinkqte/config.hpp"

#include <cstdlib>
#include <fstream>

namespace kinkqte {

namespace {

std::string trim(const std::string& v) {
    std::size_t a = v.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = v.find_last_not_of(" \t\r");
    return v.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    double out = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0') {
        throw ParseError("config key '" + key + "': cannot parse '" + v + "' as number");
    }
    return out;
}

long long to_int(const std::string& key, const std::string& v) {
    char* end = nullptr;
    long long out = std::strtoll(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0') {
        throw ParseError("config key '" + key + "': cannot parse '" + v + "' as integer");
    }
    return out;
}

}  // namespace

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = line;
        if (auto pos = s.find('#'); pos != std::string::npos) s.erase(pos);
        s = trim(s);
        if (s.empty()) continue;
        auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw ParseError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));
        if (value.size() >= 2 && ((value.front() == '"' && value.back() == '"') ||
                                  (value.front() == '\'' && value.back() == '\''))) {
            value = value.substr(1, value.size() - 2);
        }
        kv[key] = value;
    }
    return kv;
}

void apply_config_entries(AnalysisConfig& config,
                          const std::map<std::string, std::string>& entries) {
    for (const auto& [key, value] : entries) {
        auto& pl = config.pipeline;
        if (key == "kernel") {
            auto kind = kernel_from_name(value);
            if (!kind) throw InputError("config: unknown kernel '" + value + "'");
            pl.kernel.kind = *kind;
        } else if (key == "alpha") {
            pl.alpha = to_double(key, value);
        } else if (key == "B") {
            pl.B = static_cast<int>(to_int(key, value));
        } else if (key == "seed") {
            pl.seed = static_cast<std::uint64_t>(to_int(key, value));
        } else if (key == "threads") {
            pl.threads = static_cast<int>(to_int(key, value));
        } else if (key == "theta_a") {
            pl.theta_a = to_double(key, value);
        } else if (key == "y_grid_size") {
            pl.y_grid_size = static_cast<std::size_t>(to_int(key, value));
        } else if (key == "theta_grid_size") {
            pl.theta_grid_size = static_cast<std::size_t>(to_int(key, value));
        } else if (key == "density_floor") {
            pl.density_floor = to_double(key, value);
        } else if (key == "tol_denominator") {
            pl.tol_denominator = to_double(key, value);
        } else if (key == "kink_location") {
            config.kink_location = to_double(key, value);
        } else if (key == "bandwidth.c") {
            pl.bandwidths.c = to_double(key, value);
        } else if (key == "bandwidth.h0") {
            pl.bandwidths.h0 = to_double(key, value);
        } else if (key == "bandwidth.h") {
            pl.bandwidths.h = to_double(key, value);
        } else if (key == "column.outcome") {
            config.outcome_column = value;
        } else if (key == "column.treatment") {
            config.treatment_column = value;
        } else if (key == "column.running") {
            config.running_column = value;
        } else {
            throw InputError("config: unknown key '" + key + "'");
        }
    }
}

void apply_env_seed(AnalysisConfig& config) {
    const char* env = std::getenv("KINKQTE_SEED");
    if (env != nullptr && *env != '\0') {
        config.pipeline.seed = static_cast<std::uint64_t>(to_int("KINKQTE_SEED", env));
    }
}

}  // namespace kinkqte
