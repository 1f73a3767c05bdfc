#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "idscale/geometry.hpp"

namespace idscale {

// Variance-optimal inner/outer ball volume ratio: tau = c*^(1/d).
inline constexpr double kOptimalVolumeRatio = 0.2032;
// Search interval for numerically maximized likelihoods.
inline constexpr double kMinDimension = 1e-3;
inline constexpr double kMaxDimension = 1e3;

// Per-point neighbour counts inside an inner ball (radius tau * t_B) and an
// outer ball (radius t_B), both open and centred on the point itself.
struct BinomialCounts {
  std::vector<std::int64_t> k_a;
  std::vector<std::int64_t> k_b;
  double tau = 0.5;

  std::int64_t sum_a() const;
  std::int64_t sum_b() const;
  // Throws invalid-argument when the invariants 0 <= k_a <= k_b,
  // equal lengths, and 0 < tau < 1 are violated.
  void validate() const;
};

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
  bool operator==(const ConfidenceInterval&) const = default;
};

struct TraceEntry {
  std::size_t iteration = 0;
  double d = 0.0;
  double tau = 0.0;
  std::optional<double> mean_kstar;
  std::optional<double> validation_p;
  bool operator==(const TraceEntry&) const = default;
};

struct IdEstimate {
  double d = 0.0;
  double tau = 0.0;
  ConfidenceInterval ci;
  double mean_kb = 0.0;
  std::optional<double> validation_p;
  std::vector<TraceEntry> trace;
  bool operator==(const IdEstimate&) const = default;
};

struct PosteriorSummary {
  double mean = 0.0;
  double variance = 0.0;
  double alpha_star = 0.0;
  double beta_star = 0.0;
};

// Closed-form maximum likelihood estimate from ratios r_{i,2}/r_{i,1}.
IdEstimate twonn_estimate(const NeighborGraph& graph, double beta_ci = 0.05);

// log(sum k_a / sum k_b) / log(tau). Throws estimate-unbounded when
// sum k_a == 0 (the estimate diverges) instead of returning a clamped value.
double bide_closed_form(std::int64_t sum_a, std::int64_t sum_b, double tau);
double bide_closed_form(const BinomialCounts& counts);

BinomialCounts counts_fixed_radius(const NeighborGraph& graph, double t_b, double tau);
BinomialCounts counts_fixed_k(const NeighborGraph& graph, std::size_t k, double tau);

IdEstimate bide_fixed_radius(const NeighborGraph& graph, double t_b, double tau,
                             double beta_ci = 0.05);
IdEstimate bide_fixed_k(const NeighborGraph& graph, std::size_t k, double tau,
                        double beta_ci = 0.05);

// Observed Fisher information per point of the binomial likelihood.
double fisher_information(double d_star, double tau, std::span<const std::int64_t> kb_values);

// d* -/+ z_{1-beta/2} / sqrt(n I(d*)).
ConfidenceInterval fisher_interval(double d_star, double tau,
                                   std::span<const std::int64_t> kb_values, double beta);

// Beta(alpha0, beta0) prior on p = tau^d, conjugate update with the counts,
// mapped back to d through the change of variable d = log p / log tau.
PosteriorSummary beta_posterior(const BinomialCounts& counts, double alpha0, double beta0);

// One term of the generalized-ratio likelihood: log(r_{n2} / r_{n1}) for a
// point together with its neighbour orders.
struct RatioTerm {
  std::size_t n1 = 1;
  std::size_t n2 = 2;
  double log_mu = 0.0;
};

// Log-likelihood of the ratio density summed over terms. The log-Beta
// normalizers are constant in d and are included only on request.
double ratio_log_likelihood(std::span<const RatioTerm> terms, double d,
                            bool include_constant = true);

struct RatioFit {
  double d = 0.0;
  // Negative second derivative of the log-likelihood at d.
  double observed_information = 0.0;
};

// Maximizes ratio_log_likelihood over [kMinDimension, kMaxDimension]. Terms
// are sorted internally so the result does not depend on their order.
RatioFit maximize_ratio_likelihood(std::vector<RatioTerm> terms);

// Generalized-ratio estimator with common neighbour orders n1 < n2. Points
// with r_{n2} == r_{n1} are dropped with a warning.
IdEstimate gride_mle(const NeighborGraph& graph, std::size_t n1, std::size_t n2,
                     double beta_ci = 0.05);

}  // namespace idscale
