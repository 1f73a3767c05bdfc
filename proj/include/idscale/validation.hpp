#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace idscale {

struct ValidationReport {
  double p_value = 1.0;
  double statistic = 0.0;
  std::size_t synthetic_sample_size = 0;
  std::size_t observed_size = 0;
  std::uint64_t seed = 0;
  bool operator==(const ValidationReport&) const = default;
};

// Draws from the binomial mixture sum_y p_kB(y) Binomial(x; y, tau^d) with
// the empirical distribution of kb_values as the mixing law.
std::vector<std::int64_t> sample_mixture(std::span<const std::int64_t> kb_values, double d,
                                         double tau, std::size_t m, std::uint64_t seed);

// Size of the synthetic reference sample: min(10 n, 1e5), but at least n.
std::size_t synthetic_sample_size(std::size_t observed);

// Compares observed inner-ball counts with a synthetic sample drawn from the
// fitted mixture via the Epps-Singleton test. The p-value is a relative
// goodness-of-fit measure; nothing is gated on it.
ValidationReport validate_model(std::span<const std::int64_t> ka_values,
                                std::span<const std::int64_t> kb_values, double d, double tau,
                                std::uint64_t seed);

}  // namespace idscale
