#include "idscale/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <tuple>

#include <spdlog/spdlog.h>

#include "idscale/error.hpp"
#include "idscale/specfun.hpp"

namespace idscale {

namespace {

void require_tau(double tau) {
  require(tau > 0.0 && tau < 1.0, ErrorCode::invalid_argument, "tau must lie in (0, 1)");
}

void require_beta(double beta) {
  require(beta > 0.0 && beta < 1.0, ErrorCode::invalid_argument,
          "confidence level parameter must lie in (0, 1)");
}

// Summing sorted values makes the total independent of the point order.
double order_free_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return std::accumulate(values.begin(), values.end(), 0.0);
}

double mean_of(std::span<const std::int64_t> values) {
  const auto total = std::accumulate(values.begin(), values.end(), std::int64_t{0});
  return static_cast<double>(total) / static_cast<double>(values.size());
}

ConfidenceInterval interval_or_point(double d, double tau, std::span<const std::int64_t> kb,
                                     double beta) {
  if (d > 0.0) return fisher_interval(d, tau, kb, beta);
  return {d, d};
}

IdEstimate estimate_from_counts(const BinomialCounts& counts, double beta_ci) {
  IdEstimate est;
  est.d = bide_closed_form(counts);
  est.tau = counts.tau;
  est.ci = interval_or_point(est.d, counts.tau, counts.k_b, beta_ci);
  est.mean_kb = mean_of(counts.k_b);
  est.trace.push_back({0, est.d, counts.tau, std::nullopt, std::nullopt});
  return est;
}

// log(mu^d - 1) for x = d * log(mu) > 0.
double log_expm1(double x) {
  return x > 30.0 ? x + std::log1p(-std::exp(-x)) : std::log(std::expm1(x));
}

struct ScoreAndInformation {
  double score = 0.0;
  double information = 0.0;
};

ScoreAndInformation ratio_score(std::span<const RatioTerm> terms, double d) {
  ScoreAndInformation out;
  for (const auto& t : terms) {
    const double gap = static_cast<double>(t.n2 - t.n1) - 1.0;
    const double x = d * t.log_mu;
    const double one_minus = -std::expm1(-x);  // 1 - mu^{-d}
    out.score += 1.0 / d + gap * t.log_mu / one_minus -
                 static_cast<double>(t.n2 - 1) * t.log_mu;
    out.information += 1.0 / (d * d) +
                       gap * t.log_mu * t.log_mu * std::exp(-x) / (one_minus * one_minus);
  }
  return out;
}

}  // namespace

std::int64_t BinomialCounts::sum_a() const {
  return std::accumulate(k_a.begin(), k_a.end(), std::int64_t{0});
}

std::int64_t BinomialCounts::sum_b() const {
  return std::accumulate(k_b.begin(), k_b.end(), std::int64_t{0});
}

void BinomialCounts::validate() const {
  require(k_a.size() == k_b.size(), ErrorCode::invalid_argument,
          "inner and outer count lists differ in length");
  require(!k_b.empty(), ErrorCode::invalid_argument, "count lists are empty");
  require_tau(tau);
  for (std::size_t i = 0; i < k_a.size(); ++i)
    require(k_a[i] >= 0 && k_a[i] <= k_b[i], ErrorCode::invalid_argument,
            "counts must satisfy 0 <= k_a <= k_b (point " + std::to_string(i) + ")");
}

IdEstimate twonn_estimate(const NeighborGraph& graph, double beta_ci) {
  require(graph.depth() >= 2, ErrorCode::insufficient_graph_depth,
          "2NN needs at least two stored neighbours per point");
  require_beta(beta_ci);
  const std::size_t n = graph.size();
  std::vector<double> log_ratios(n);
  for (std::size_t i = 0; i < n; ++i)
    log_ratios[i] = graph.log_distance(i, 2) - graph.log_distance(i, 1);
  const double total = order_free_sum(std::move(log_ratios));
  require(total > 0.0, ErrorCode::estimate_unbounded,
          "all second/first neighbour distance ratios equal 1");

  IdEstimate est;
  est.d = static_cast<double>(n) / total;
  // Interval through the equivalent binomial view: one neighbour in every
  // outer ball, tau at its variance-optimal value for this d.
  est.tau = std::pow(kOptimalVolumeRatio, 1.0 / est.d);
  const std::vector<std::int64_t> ones(n, 1);
  est.ci = fisher_interval(est.d, est.tau, ones, beta_ci);
  est.mean_kb = 1.0;
  est.trace.push_back({0, est.d, est.tau, std::nullopt, std::nullopt});
  return est;
}

double bide_closed_form(std::int64_t sum_a, std::int64_t sum_b, double tau) {
  require_tau(tau);
  require(sum_b > 0, ErrorCode::degenerate_scale, "outer balls are all empty");
  require(sum_a >= 0 && sum_a <= sum_b, ErrorCode::invalid_argument,
          "inner count total exceeds outer count total");
  require(sum_a > 0, ErrorCode::estimate_unbounded,
          "inner balls are all empty; the estimate diverges");
  if (sum_a == sum_b) return 0.0;
  return std::log(static_cast<double>(sum_a) / static_cast<double>(sum_b)) / std::log(tau);
}

double bide_closed_form(const BinomialCounts& counts) {
  counts.validate();
  return bide_closed_form(counts.sum_a(), counts.sum_b(), counts.tau);
}

BinomialCounts counts_fixed_radius(const NeighborGraph& graph, double t_b, double tau) {
  require_tau(tau);
  require(t_b > 0.0 && std::isfinite(t_b), ErrorCode::invalid_argument,
          "outer radius must be positive");
  BinomialCounts counts;
  counts.tau = tau;
  counts.k_a.resize(graph.size());
  counts.k_b.resize(graph.size());
  for (std::size_t i = 0; i < graph.size(); ++i) {
    counts.k_b[i] = static_cast<std::int64_t>(count_within_open_ball(graph, i, t_b));
    counts.k_a[i] = static_cast<std::int64_t>(count_within_open_ball(graph, i, tau * t_b));
  }
  return counts;
}

BinomialCounts counts_fixed_k(const NeighborGraph& graph, std::size_t k, double tau) {
  require_tau(tau);
  require(k >= 1, ErrorCode::invalid_argument, "neighbour order must be positive");
  require(k <= graph.depth(), ErrorCode::insufficient_graph_depth,
          "neighbour order " + std::to_string(k) + " exceeds graph depth");
  BinomialCounts counts;
  counts.tau = tau;
  counts.k_a.resize(graph.size());
  counts.k_b.assign(graph.size(), static_cast<std::int64_t>(k) - 1);
  for (std::size_t i = 0; i < graph.size(); ++i)
    counts.k_a[i] =
        static_cast<std::int64_t>(count_within_open_ball(graph, i, tau * graph.distance(i, k)));
  return counts;
}

IdEstimate bide_fixed_radius(const NeighborGraph& graph, double t_b, double tau, double beta_ci) {
  require_beta(beta_ci);
  const BinomialCounts counts = counts_fixed_radius(graph, t_b, tau);
  require(counts.sum_b() > 0, ErrorCode::degenerate_scale,
          "no point has a neighbour closer than t_B");
  return estimate_from_counts(counts, beta_ci);
}

IdEstimate bide_fixed_k(const NeighborGraph& graph, std::size_t k, double tau, double beta_ci) {
  require_beta(beta_ci);
  require(k >= 2, ErrorCode::degenerate_scale, "k = 1 leaves every outer shell empty");
  return estimate_from_counts(counts_fixed_k(graph, k, tau), beta_ci);
}

double fisher_information(double d_star, double tau, std::span<const std::int64_t> kb_values) {
  require_tau(tau);
  require(d_star > 0.0 && std::isfinite(d_star), ErrorCode::invalid_argument,
          "Fisher information needs a positive finite dimension");
  require(!kb_values.empty(), ErrorCode::invalid_argument, "empty outer count list");
  const double mean_kb = mean_of(kb_values);
  require(mean_kb > 0.0, ErrorCode::degenerate_scale, "outer balls are all empty");
  const double log_tau = std::log(tau);
  const double p = std::pow(tau, d_star);
  return log_tau * log_tau * p * mean_kb / (1.0 - p);
}

ConfidenceInterval fisher_interval(double d_star, double tau,
                                   std::span<const std::int64_t> kb_values, double beta) {
  require_beta(beta);
  const double info = fisher_information(d_star, tau, kb_values);
  const double z = std_normal_quantile(1.0 - 0.5 * beta);
  const double half = z / std::sqrt(static_cast<double>(kb_values.size()) * info);
  return {d_star - half, d_star + half};
}

PosteriorSummary beta_posterior(const BinomialCounts& counts, double alpha0, double beta0) {
  counts.validate();
  require(alpha0 > 0.0 && beta0 > 0.0, ErrorCode::invalid_argument,
          "Beta prior parameters must be positive");
  PosteriorSummary post;
  const auto sum_a = counts.sum_a();
  post.alpha_star = alpha0 + static_cast<double>(sum_a);
  post.beta_star = beta0 + static_cast<double>(counts.sum_b() - sum_a);
  const double log_tau = std::log(counts.tau);
  const double total = post.alpha_star + post.beta_star;
  post.mean = (digamma(post.alpha_star) - digamma(total)) / log_tau;
  post.variance = (trigamma(post.alpha_star) - trigamma(total)) / (log_tau * log_tau);
  return post;
}

double ratio_log_likelihood(std::span<const RatioTerm> terms, double d, bool include_constant) {
  require(d > 0.0, ErrorCode::invalid_argument, "dimension must be positive");
  double total = 0.0;
  for (const auto& t : terms) {
    const double gap = static_cast<double>(t.n2 - t.n1) - 1.0;
    const double x = d * t.log_mu;
    double term = std::log(d) - (d * static_cast<double>(t.n2 - 1) + 1.0) * t.log_mu;
    if (gap > 0.0) term += gap * log_expm1(x);
    if (include_constant) {
      const double a = static_cast<double>(t.n2 - t.n1);
      const double b = static_cast<double>(t.n1);
      term -= log_gamma(a) + log_gamma(b) - log_gamma(a + b);
    }
    total += term;
  }
  return total;
}

RatioFit maximize_ratio_likelihood(std::vector<RatioTerm> terms) {
  require(!terms.empty(), ErrorCode::optimization_failure, "no usable distance ratios");
  for (const auto& t : terms)
    require(t.n1 >= 1 && t.n2 > t.n1 && t.log_mu > 0.0, ErrorCode::invalid_argument,
            "ratio terms need 1 <= n1 < n2 and mu > 1");
  std::sort(terms.begin(), terms.end(), [](const RatioTerm& a, const RatioTerm& b) {
    return std::tie(a.n1, a.n2, a.log_mu) < std::tie(b.n1, b.n2, b.log_mu);
  });

  // The log-likelihood is strictly concave, so its score is decreasing and
  // the maximizer is the unique root of the score inside the bracket.
  double lo = kMinDimension;
  double hi = kMaxDimension;
  const double score_lo = ratio_score(terms, lo).score;
  const double score_hi = ratio_score(terms, hi).score;
  if (!(score_lo > 0.0) || !(score_hi < 0.0)) {
    fail(ErrorCode::optimization_failure,
         "no interior likelihood maximum in [" + std::to_string(lo) + ", " + std::to_string(hi) +
             "]: score(lo) = " + std::to_string(score_lo) +
             ", score(hi) = " + std::to_string(score_hi));
  }

  double d = std::sqrt(lo * hi);
  for (int iter = 0; iter < 500; ++iter) {
    const auto [score, info] = ratio_score(terms, d);
    if (score == 0.0) break;
    if (score > 0.0)
      lo = d;
    else
      hi = d;
    double next = d + score / info;
    if (!std::isfinite(next) || next <= lo || next >= hi) next = 0.5 * (lo + hi);
    const bool done = std::abs(next - d) <= 1e-15 * d;
    d = next;
    if (done || hi - lo <= 1e-15 * d) break;
  }
  return {d, ratio_score(terms, d).information};
}

IdEstimate gride_mle(const NeighborGraph& graph, std::size_t n1, std::size_t n2, double beta_ci) {
  require_beta(beta_ci);
  require(n1 >= 1 && n2 > n1, ErrorCode::invalid_argument, "need 1 <= n1 < n2");
  require(n2 <= graph.depth(), ErrorCode::insufficient_graph_depth,
          "n2 exceeds the stored neighbour depth");
  std::vector<RatioTerm> terms;
  terms.reserve(graph.size());
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const double log_mu = graph.log_distance(i, n2) - graph.log_distance(i, n1);
    if (log_mu > 0.0)
      terms.push_back({n1, n2, log_mu});
    else
      ++dropped;
  }
  if (dropped > 0) spdlog::warn("dropped {} point(s) with unit distance ratio", dropped);

  const RatioFit fit = maximize_ratio_likelihood(std::move(terms));
  IdEstimate est;
  est.d = fit.d;
  est.tau = std::pow(kOptimalVolumeRatio, 1.0 / fit.d);
  const double half = std_normal_quantile(1.0 - 0.5 * beta_ci) / std::sqrt(fit.observed_information);
  est.ci = {fit.d - half, fit.d + half};
  est.mean_kb = static_cast<double>(n2 - 1);
  est.trace.push_back({0, est.d, est.tau, std::nullopt, std::nullopt});
  return est;
}

}  // namespace idscale
