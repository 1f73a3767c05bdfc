#pragma once

#include <cstdint>
#include <functional>
#include <span>

namespace idscale {

double log_gamma(double x);
double digamma(double z);
double trigamma(double z);

double log_sum_exp(double a, double b) noexcept;
double log_sum_exp(std::span<const double> values) noexcept;

// Regularized incomplete gamma functions P(a, x) and Q(a, x) = 1 - P(a, x).
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);

double std_normal_cdf(double x) noexcept;
double std_normal_sf(double x) noexcept;
double std_normal_quantile(double prob);

double chi2_cdf(double x, double df);
double chi2_sf(double x, double df);
double chi2_quantile(double prob, double df);
// Upper quantile: the q with P(X > q) = alpha. Stays accurate for tiny alpha
// where 1 - alpha would round.
double chi2_upper_quantile(double alpha, double df);
double chi2_quantile_1df(double prob);

// Linear interpolation between order statistics (numpy's default) on an
// ascending sample.
double empirical_quantile(std::span<const double> sorted, double p);

// Survival function of the Kolmogorov distribution, P(K > x).
double kolmogorov_sf(double x) noexcept;

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// One-sample Kolmogorov-Smirnov test against a continuous CDF.
KsResult ks_one_sample(std::span<const double> sample, const std::function<double(double)>& cdf);

struct EppsSingletonResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int df = 4;
};

// Two-sample Epps-Singleton test on the empirical characteristic function,
// evaluated at t = (0.4, 0.8) divided by the pooled semi-interquartile range.
// Throws degenerate-sample when that range is zero.
EppsSingletonResult epps_singleton(std::span<const double> sample_a,
                                   std::span<const double> sample_b);
EppsSingletonResult epps_singleton(std::span<const std::int64_t> sample_a,
                                   std::span<const std::int64_t> sample_b);

}  // namespace idscale
