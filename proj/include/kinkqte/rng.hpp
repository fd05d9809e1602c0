#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace kinkqte::rng {

// splitmix64 finalizer, used to derive decorrelated substream seeds from a
// master seed and a (salt, index) pair. Counter-based: substreams can be
// created in any order on any thread and always produce the same stream.
std::uint64_t mix64(std::uint64_t z);
std::uint64_t substream_seed(std::uint64_t master, std::uint64_t salt, std::uint64_t index);

// Salt registry; keeps independent purposes on disjoint substreams.
inline constexpr std::uint64_t salt_bootstrap_draw = 1;
inline constexpr std::uint64_t salt_sim_sample = 2;
inline constexpr std::uint64_t salt_sim_bootstrap = 3;
inline constexpr std::uint64_t salt_rep = 4;

// Uniform double in (0,1), 53-bit resolution, from a fully specified engine.
double next_uniform(std::mt19937_64& eng);

// Standard normal quantile (Wichura's AS241, double precision) and CDF.
double normal_quantile(double p);
double normal_cdf(double x);

// Deterministic standard normal stream via inverse-CDF sampling.
// std::normal_distribution is implementation-defined, so it is avoided.
class NormalStream {
  public:
    explicit NormalStream(std::uint64_t seed) : eng_(seed) {}

    double next() { return normal_quantile(next_uniform(eng_)); }

    void fill(std::span<double> out) {
        for (double& v : out) v = next();
    }

    std::mt19937_64& engine() { return eng_; }

  private:
    std::mt19937_64 eng_;
};

std::vector<double> normal_vector(std::uint64_t seed, std::size_t n);

}  // namespace kinkqte::rng
