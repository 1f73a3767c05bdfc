#include "idscale/validation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "idscale/error.hpp"
#include "idscale/rng.hpp"
#include "idscale/specfun.hpp"

namespace idscale {

std::vector<std::int64_t> sample_mixture(std::span<const std::int64_t> kb_values, double d,
                                         double tau, std::size_t m, std::uint64_t seed) {
  require(!kb_values.empty(), ErrorCode::invalid_argument, "empty outer count list");
  require(m >= 1, ErrorCode::invalid_argument, "sample size must be positive");
  require(tau > 0.0 && tau <= 1.0 && d >= 0.0, ErrorCode::invalid_argument,
          "mixture needs 0 < tau <= 1 and d >= 0");
  for (auto y : kb_values)
    require(y >= 0, ErrorCode::invalid_argument, "outer counts must be nonnegative");
  const double p = std::clamp(std::pow(tau, d), 0.0, 1.0);

  Engine engine = make_engine(seed, 0x6d6978);
  std::uniform_int_distribution<std::size_t> pick(0, kb_values.size() - 1);
  std::vector<std::int64_t> draws(m);
  for (auto& x : draws) {
    const std::int64_t y = kb_values[pick(engine)];
    if (p >= 1.0) {
      x = y;
    } else if (p <= 0.0 || y == 0) {
      x = 0;
    } else {
      x = std::binomial_distribution<std::int64_t>(y, p)(engine);
    }
  }
  return draws;
}

std::size_t synthetic_sample_size(std::size_t observed) {
  // Never smaller than the observed sample.
  return std::max(observed, std::min<std::size_t>(10 * observed, 100000));
}

ValidationReport validate_model(std::span<const std::int64_t> ka_values,
                                std::span<const std::int64_t> kb_values, double d, double tau,
                                std::uint64_t seed) {
  require(ka_values.size() == kb_values.size(), ErrorCode::invalid_argument,
          "inner and outer count lists differ in length");
  require(!ka_values.empty(), ErrorCode::invalid_argument, "empty count lists");
  for (std::size_t i = 0; i < ka_values.size(); ++i)
    require(ka_values[i] >= 0 && ka_values[i] <= kb_values[i], ErrorCode::invalid_argument,
            "counts must satisfy 0 <= k_a <= k_b");

  ValidationReport report;
  report.observed_size = ka_values.size();
  report.synthetic_sample_size = synthetic_sample_size(ka_values.size());
  report.seed = seed;
  const auto synthetic = sample_mixture(kb_values, d, tau, report.synthetic_sample_size, seed);
  const auto es = epps_singleton(std::span<const std::int64_t>(synthetic), ka_values);
  report.statistic = es.statistic;
  report.p_value = es.p_value;
  return report;
}

}  // namespace idscale
