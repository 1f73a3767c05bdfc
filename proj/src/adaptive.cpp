#include "idscale/adaptive.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>

#include <spdlog/spdlog.h>

#include "idscale/parallel.hpp"
#include "idscale/rng.hpp"
#include "idscale/specfun.hpp"
#include "idscale/validation.hpp"

namespace idscale {

std::string_view to_string(ThresholdMode mode) noexcept {
  switch (mode) {
    case ThresholdMode::fixed: return "fixed";
    case ThresholdMode::bonferroni_h: return "bonf-h";
    case ThresholdMode::bonferroni_n: return "bonf-n";
    case ThresholdMode::bonferroni_nh: return "bonf-nh";
  }
  return "fixed";
}

ThresholdMode parse_threshold_mode(std::string_view text) {
  if (text == "fixed") return ThresholdMode::fixed;
  if (text == "bonf-h" || text == "bonferroni_h") return ThresholdMode::bonferroni_h;
  if (text == "bonf-n" || text == "bonferroni_n") return ThresholdMode::bonferroni_n;
  if (text == "bonf-nh" || text == "bonferroni_nh") return ThresholdMode::bonferroni_nh;
  fail(ErrorCode::invalid_argument, "unknown threshold mode '" + std::string(text) + "'");
}

void EstimatorConfig::check() const {
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::invalid_argument, "alpha must lie in (0, 1)");
  require(!threshold_override || *threshold_override > 0.0, ErrorCode::invalid_argument,
          "threshold override must be positive");
  require(k_max >= kMinTestedOrder, ErrorCode::invalid_argument, "k_max must be at least 2");
  require(max_iter >= 1, ErrorCode::invalid_argument, "max_iter must be positive");
  require(delta > 0.0, ErrorCode::invalid_argument, "tolerance must be positive");
  require(c_star > 0.0 && c_star < 1.0, ErrorCode::invalid_argument, "c* must lie in (0, 1)");
  require(beta_ci > 0.0 && beta_ci < 1.0, ErrorCode::invalid_argument,
          "beta_ci must lie in (0, 1)");
}

std::size_t sequential_test_count(const EstimatorConfig& config) {
  return config.k_max - kMinTestedOrder + 1;
}

double rejection_threshold(const EstimatorConfig& config, std::size_t n) {
  if (config.threshold_override) return *config.threshold_override;
  const double h = static_cast<double>(sequential_test_count(config));
  const double size = static_cast<double>(n);
  double level = config.alpha;
  switch (config.threshold_mode) {
    case ThresholdMode::fixed: break;
    case ThresholdMode::bonferroni_h: level /= h; break;
    case ThresholdMode::bonferroni_n: level /= size; break;
    case ThresholdMode::bonferroni_nh: level /= size * h; break;
  }
  return chi2_upper_quantile(level, 1.0);
}

double lrt_statistic(double d, std::size_t k, double log_r_i_k, double log_r_j_k) {
  require(d > 0.0, ErrorCode::invalid_argument, "dimension must be positive");
  // With x the log-volume difference, log V_i + log V_j - 2 log(V_i + V_j)
  // + log 4 = 2 log 2 - |x| - 2 log(1 + e^{-|x|}).
  const double x = std::abs(d * (log_r_j_k - log_r_i_k));
  const double stat =
      2.0 * static_cast<double>(k) * (x + 2.0 * std::log1p(std::exp(-x)) - 2.0 * std::numbers::ln2);
  return std::max(0.0, stat);
}

std::size_t select_k_star(const NeighborGraph& graph, std::size_t i, double d, std::size_t k_max,
                          double threshold) {
  require(k_max >= kMinTestedOrder, ErrorCode::invalid_argument, "k_max must be at least 2");
  require(graph.depth() >= k_max + 1, ErrorCode::insufficient_graph_depth,
          "graph depth " + std::to_string(graph.depth()) + " below k_max + 1 = " +
              std::to_string(k_max + 1));
  for (std::size_t k = kMinTestedOrder; k <= k_max; ++k) {
    const std::size_t j = graph.neighbor(i, k + 1);
    if (lrt_statistic(d, k, graph.log_distance(i, k), graph.log_distance(j, k)) >= threshold)
      return k;
  }
  return k_max;
}

std::size_t select_k_star(const NeighborGraph& graph, std::size_t i, double d,
                          const EstimatorConfig& config) {
  return select_k_star(graph, i, d, config.k_max, rejection_threshold(config, graph.size()));
}

double AdaptiveState::mean_kstar() const {
  const auto total = std::accumulate(k_star.begin(), k_star.end(), std::size_t{0});
  return static_cast<double>(total) / static_cast<double>(k_star.size());
}

double AdaptiveState::mean_tb() const {
  return std::accumulate(t_b.begin(), t_b.end(), 0.0) / static_cast<double>(t_b.size());
}

double AdaptiveState::mean_ta() const {
  return std::accumulate(t_a.begin(), t_a.end(), 0.0) / static_cast<double>(t_a.size());
}

double AdaptiveState::saturation_fraction(std::size_t k_max) const {
  const auto saturated = std::count(k_star.begin(), k_star.end(), k_max);
  return static_cast<double>(saturated) / static_cast<double>(k_star.size());
}

BinomialCounts AdaptiveState::counts() const { return {ka_star, kb_star, tau}; }

AdaptiveState compute_adaptive_state(const NeighborGraph& graph, double d, double tau,
                                     std::size_t k_max, double threshold, unsigned threads) {
  require(d > 0.0 && std::isfinite(d), ErrorCode::invalid_argument,
          "dimension must be positive and finite");
  require(tau > 0.0 && tau < 1.0, ErrorCode::invalid_argument, "tau must lie in (0, 1)");
  require(graph.depth() >= k_max + 1, ErrorCode::insufficient_graph_depth,
          "graph depth " + std::to_string(graph.depth()) + " below k_max + 1 = " +
              std::to_string(k_max + 1));
  const std::size_t n = graph.size();
  AdaptiveState state;
  state.d = d;
  state.tau = tau;
  state.k_star.resize(n);
  state.kb_star.resize(n);
  state.ka_star.resize(n);
  state.t_b.resize(n);
  state.t_a.resize(n);
  parallel_for(n, threads, [&](std::size_t i) {
    const std::size_t k = select_k_star(graph, i, d, k_max, threshold);
    state.k_star[i] = k;
    state.kb_star[i] = static_cast<std::int64_t>(k) - 1;
    state.t_b[i] = graph.distance(i, k);
    state.t_a[i] = tau * state.t_b[i];
    state.ka_star[i] = static_cast<std::int64_t>(count_within_open_ball(graph, i, state.t_a[i]));
  });
  return state;
}

AdaptiveState compute_adaptive_state(const NeighborGraph& graph, double d,
                                     const EstimatorConfig& config) {
  return compute_adaptive_state(graph, d, std::pow(config.c_star, 1.0 / d), config.k_max,
                                rejection_threshold(config, graph.size()), config.threads);
}

RatioFit agride_update(const NeighborGraph& graph, std::span<const std::size_t> k_star) {
  require(k_star.size() == graph.size(), ErrorCode::invalid_argument,
          "one neighbourhood size per point is required");
  std::vector<RatioTerm> terms;
  terms.reserve(k_star.size());
  for (std::size_t i = 0; i < k_star.size(); ++i) {
    const std::size_t n2 = k_star[i];
    const std::size_t n1 = std::max<std::size_t>(1, n2 / 2);
    require(n2 >= 2 && n2 <= graph.depth(), ErrorCode::insufficient_graph_depth,
            "neighbourhood size outside the stored graph depth");
    const double log_mu = graph.log_distance(i, n2) - graph.log_distance(i, n1);
    if (log_mu > 0.0) terms.push_back({n1, n2, log_mu});
  }
  return maximize_ratio_likelihood(std::move(terms));
}

namespace {

using Clock = std::chrono::steady_clock;

struct Strategy {
  // Next iterate from the neighbourhoods selected with the current d.
  std::function<double(const AdaptiveState&)> update;
  // Interval reported around the final estimate.
  std::function<ConfidenceInterval(const AdaptiveState&, double)> interval;
};

std::optional<double> validation_p(const AdaptiveState& state, double d, std::uint64_t seed) {
  if (!(d > 0.0)) return std::nullopt;
  try {
    return validate_model(state.ka_star, state.kb_star, d, state.tau, seed).p_value;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::degenerate_sample) throw;
    return std::nullopt;
  }
}

AbideResult run_fixed_point(const NeighborGraph& graph, const EstimatorConfig& config,
                            const Strategy& strategy) {
  config.check();
  require(graph.depth() >= config.required_depth(), ErrorCode::insufficient_graph_depth,
          "graph depth " + std::to_string(graph.depth()) + " below k_max + 1 = " +
              std::to_string(config.required_depth()));
  const std::size_t n = graph.size();
  if (n < 100) spdlog::warn("adaptive estimation on only {} points; results may be unstable", n);

  AbideResult result;
  result.threshold = rejection_threshold(config, n);
  std::vector<TraceEntry> trace;

  const double d0 = twonn_estimate(graph, config.beta_ci).d;
  trace.push_back({0, d0, std::pow(config.c_star, 1.0 / d0), std::nullopt, std::nullopt});

  double d_current = d0;
  double d_next = d0;
  for (std::size_t it = 1; it <= config.max_iter; ++it) {
    const auto start = Clock::now();
    const double tau = std::pow(config.c_star, 1.0 / d_current);
    const AdaptiveState state =
        compute_adaptive_state(graph, d_current, tau, config.k_max, result.threshold, config.threads);
    try {
      d_next = strategy.update(state);
    } catch (const Error& e) {
      throw AdaptiveError(e.code(), e.what(), trace);
    }
    if (!std::isfinite(d_next) || d_next <= 0.0) {
      throw AdaptiveError(ErrorCode::optimization_failure,
                          "iteration " + std::to_string(it) + " produced d = " +
                              std::to_string(d_next),
                          trace);
    }
    TraceEntry entry{it, d_next, tau, state.mean_kstar(), std::nullopt};
    if (config.validate) entry.validation_p = validation_p(state, d_next, derive_seed(config.seed, it));
    trace.push_back(entry);
    result.iteration_seconds.push_back(std::chrono::duration<double>(Clock::now() - start).count());
    result.iterations_run = it;
    if (std::abs(d_current - d_next) < config.delta) {
      result.converged = true;
      break;
    }
    d_current = d_next;
  }

  const double d_star = d_next;
  result.state = compute_adaptive_state(graph, d_star, std::pow(config.c_star, 1.0 / d_star),
                                        config.k_max, result.threshold, config.threads);
  result.estimate.d = d_star;
  result.estimate.tau = result.state.tau;
  result.estimate.mean_kb =
      static_cast<double>(result.state.counts().sum_b()) / static_cast<double>(n);
  result.estimate.ci = strategy.interval(result.state, d_star);
  if (config.validate)
    result.estimate.validation_p = validation_p(result.state, d_star, derive_seed(config.seed, 0));
  result.estimate.trace = std::move(trace);
  if (!result.converged)
    spdlog::info("fixed point not reached within {} iterations (last step {:.3g})",
                 config.max_iter,
                 std::abs(result.estimate.trace.back().d -
                          result.estimate.trace[result.estimate.trace.size() - 2].d));
  return result;
}

}  // namespace

AbideResult abide(const NeighborGraph& graph, const EstimatorConfig& config) {
  Strategy strategy;
  strategy.update = [](const AdaptiveState& s) { return bide_closed_form(s.counts()); };
  strategy.interval = [&](const AdaptiveState& s, double d) {
    return fisher_interval(d, s.tau, s.kb_star, config.beta_ci);
  };
  return run_fixed_point(graph, config, strategy);
}

AbideResult babide(const NeighborGraph& graph, const EstimatorConfig& config, double alpha0,
                   double beta0) {
  require(alpha0 > 0.0 && beta0 > 0.0, ErrorCode::invalid_argument,
          "Beta prior parameters must be positive");
  Strategy strategy;
  strategy.update = [=](const AdaptiveState& s) {
    return beta_posterior(s.counts(), alpha0, beta0).mean;
  };
  strategy.interval = [&, alpha0, beta0](const AdaptiveState& s, double d) {
    const auto post = beta_posterior(s.counts(), alpha0, beta0);
    const double half = std_normal_quantile(1.0 - 0.5 * config.beta_ci) * std::sqrt(post.variance);
    return ConfidenceInterval{d - half, d + half};
  };
  return run_fixed_point(graph, config, strategy);
}

AbideResult agride(const NeighborGraph& graph, const EstimatorConfig& config) {
  Strategy strategy;
  strategy.update = [&](const AdaptiveState& s) { return agride_update(graph, s.k_star).d; };
  strategy.interval = [&](const AdaptiveState& s, double d) {
    const RatioFit fit = agride_update(graph, s.k_star);
    const double half =
        std_normal_quantile(1.0 - 0.5 * config.beta_ci) / std::sqrt(fit.observed_information);
    return ConfidenceInterval{d - half, d + half};
  };
  return run_fixed_point(graph, config, strategy);
}

double abide_map(const NeighborGraph& graph, double d, const EstimatorConfig& config) {
  return bide_closed_form(compute_adaptive_state(graph, d, config).counts());
}

}  // namespace idscale
