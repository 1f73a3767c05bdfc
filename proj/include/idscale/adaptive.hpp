#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "idscale/error.hpp"
#include "idscale/estimators.hpp"
#include "idscale/geometry.hpp"

namespace idscale {

enum class ThresholdMode { fixed, bonferroni_h, bonferroni_n, bonferroni_nh };

std::string_view to_string(ThresholdMode mode) noexcept;
ThresholdMode parse_threshold_mode(std::string_view text);

// Smallest neighbour order tested; keeps every outer count k* - 1 >= 1.
inline constexpr std::size_t kMinTestedOrder = 2;

struct EstimatorConfig {
  double alpha = 0.01;
  ThresholdMode threshold_mode = ThresholdMode::fixed;
  std::optional<double> threshold_override;
  std::size_t k_max = 350;
  std::size_t max_iter = 5;
  double delta = 1e-4;
  double c_star = kOptimalVolumeRatio;
  double beta_ci = 0.05;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  // Run the binomial-mixture goodness-of-fit check at every iteration.
  bool validate = true;

  void check() const;
  // Neighbour depth the graph must store: k_max + 1.
  std::size_t required_depth() const { return k_max + 1; }
};

// Number of sequential tests per point, h = k_max - kMinTestedOrder + 1.
std::size_t sequential_test_count(const EstimatorConfig& config);

// D_thr: the chi-square(1) upper quantile at the (possibly Bonferroni
// adjusted) level, or the explicit override.
double rejection_threshold(const EstimatorConfig& config, std::size_t n);

// Likelihood-ratio statistic comparing the density around point i with the
// density around its (k+1)-th neighbour j, both measured with k-neighbour
// balls of dimension d. The unit-ball volume cancels, so only d * log r
// enters.
double lrt_statistic(double d, std::size_t k, double log_r_i_k, double log_r_j_k);

// First k >= 2 at which the test rejects constant density, capped at k_max.
std::size_t select_k_star(const NeighborGraph& graph, std::size_t i, double d,
                          std::size_t k_max, double threshold);
std::size_t select_k_star(const NeighborGraph& graph, std::size_t i, double d,
                          const EstimatorConfig& config);

// Per-point optimal neighbourhoods for one value of d.
struct AdaptiveState {
  double d = 0.0;
  double tau = 0.0;
  std::vector<std::size_t> k_star;
  std::vector<std::int64_t> kb_star;  // k* - 1
  std::vector<std::int64_t> ka_star;  // neighbours closer than t_A
  std::vector<double> t_b;            // r_{i,k*}
  std::vector<double> t_a;            // tau * t_B

  double mean_kstar() const;
  double mean_tb() const;
  double mean_ta() const;
  double saturation_fraction(std::size_t k_max) const;
  BinomialCounts counts() const;
};

AdaptiveState compute_adaptive_state(const NeighborGraph& graph, double d, double tau,
                                     std::size_t k_max, double threshold, unsigned threads = 1);
// Uses tau = c*^(1/d) and the configured threshold.
AdaptiveState compute_adaptive_state(const NeighborGraph& graph, double d,
                                     const EstimatorConfig& config);

struct AbideResult {
  IdEstimate estimate;
  AdaptiveState state;  // recomputed with the final d
  std::size_t iterations_run = 0;
  bool converged = false;
  double threshold = 0.0;
  std::vector<double> iteration_seconds;
};

// Raised when an iteration cannot produce a finite estimate; carries the
// trace accumulated up to the failure.
class AdaptiveError : public Error {
 public:
  AdaptiveError(ErrorCode code, const std::string& message, std::vector<TraceEntry> trace)
      : Error(code, message), trace_(std::move(trace)) {}
  const std::vector<TraceEntry>& trace() const noexcept { return trace_; }

 private:
  std::vector<TraceEntry> trace_;
};

// Fixed-point iteration starting from the 2NN estimate: select k*_i with the
// current d, set tau = c*^(1/d), re-estimate d from the binomial counts.
AbideResult abide(const NeighborGraph& graph, const EstimatorConfig& config);

// Same iteration with d_next set to the Beta-posterior mean.
AbideResult babide(const NeighborGraph& graph, const EstimatorConfig& config, double alpha0 = 1.0,
                   double beta0 = 1.0);

// Same iteration with d_next maximizing the generalized-ratio likelihood with
// per-point orders n2 = k*_i and n1 = max(1, floor(k*_i / 2)).
AbideResult agride(const NeighborGraph& graph, const EstimatorConfig& config);

// One ABIDE update G(d).
double abide_map(const NeighborGraph& graph, double d, const EstimatorConfig& config);

// One AGRIDE update for given per-point neighbourhood sizes.
RatioFit agride_update(const NeighborGraph& graph, std::span<const std::size_t> k_star);

}  // namespace idscale
