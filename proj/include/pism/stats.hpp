#pragma once

#include <cstdint>
#include <string_view>
#include <span>
#include <utility>
#include <vector>

namespace pism {

double mean(std::span<const double> xs);

// Population standard deviation (divides by n).
double population_stddev(std::span<const double> xs);

// stddev / mean; 0 for an all-zero series.
double coefficient_of_variation(std::span<const double> xs);

// Pearson correlation; NaN when either series has zero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);

// Nearest-rank quantile: sorted[ceil(p*n) - 1], p in (0, 1]. p == 0 yields the minimum.
double nearest_rank(std::span<const double> sorted, double p);

// Empirical CDF as (value, cumulative fraction) pairs, one per distinct value.
using Cdf = std::vector<std::pair<double, double>>;
Cdf make_cdf(std::vector<double> values);

// Counter-based hashing used for reproducible per-(entity, tick) randomness.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value);
double unit_uniform(std::uint64_t bits);                      // [0, 1)
double standard_normal(std::uint64_t seed, std::uint64_t key);  // Box-Muller on two hashed uniforms

std::uint64_t fnv1a(std::string_view text);

}  // namespace pism
