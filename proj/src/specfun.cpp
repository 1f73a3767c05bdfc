#include "idscale/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "idscale/error.hpp"

namespace idscale {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTiny = 1e-300;

double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 10000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
}

// Modified Lentz evaluation of the continued fraction for Q(a, x).
double gamma_q_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - log_gamma(a)) * h;
}

double log_chi2_pdf(double x, double df) {
  const double k = 0.5 * df;
  return (k - 1.0) * std::log(x) - 0.5 * x - k * std::numbers::ln2 - log_gamma(k);
}

// Solves P(X <= q) = target (upper == false) or P(X > q) = target (upper ==
// true) by safeguarded Newton iteration in t = log q on the log-probability.
double chi2_solve(double target, double df, bool upper) {
  auto prob_at = [&](double t) {
    const double x = std::exp(t);
    return upper ? chi2_sf(x, df) : chi2_cdf(x, df);
  };
  // g(t) is increasing in t in both branches.
  auto g = [&](double t) {
    const double f = prob_at(t);
    const double h = std::log(f) - std::log(target);
    return upper ? -h : h;
  };

  double lo = std::log(1e-300);
  if (!upper && g(lo) >= 0.0) return 0.0;
  double hi = std::log(std::max(df, 1.0)) + 1.0;
  while (g(hi) < 0.0) hi += 1.0;
  while (g(lo) >= 0.0 && lo < hi) lo -= 1.0;

  double t;
  {
    const double z = upper ? -std_normal_quantile(target) : std_normal_quantile(target);
    const double w = 2.0 / (9.0 * df);
    const double guess = df * std::pow(1.0 - w + z * std::sqrt(w), 3);
    t = guess > 0.0 ? std::clamp(std::log(guess), lo, hi) : 0.5 * (lo + hi);
  }

  for (int iter = 0; iter < 300; ++iter) {
    const double x = std::exp(t);
    const double f = prob_at(t);
    const double value = g(t);
    if (value == 0.0) return x;
    if (value < 0.0)
      lo = t;
    else
      hi = t;
    const double slope = std::exp(log_chi2_pdf(x, df)) * x / f;
    double next = t - value / slope;
    if (!std::isfinite(next) || next <= lo || next >= hi) next = 0.5 * (lo + hi);
    if (std::abs(next - t) <= 4.0 * kEps * std::max(1.0, std::abs(t))) return std::exp(next);
    t = next;
    if (hi - lo <= 4.0 * kEps * std::max(1.0, std::abs(t))) break;
  }
  return std::exp(t);
}

}  // namespace

double empirical_quantile(std::span<const double> sorted, double p) {
  require(!sorted.empty(), ErrorCode::invalid_argument, "quantile of an empty sample");
  require(p >= 0.0 && p <= 1.0, ErrorCode::invalid_argument, "quantile level outside [0, 1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double log_gamma(double x) {
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

double digamma(double z) {
  require(z > 0.0 && std::isfinite(z), ErrorCode::invalid_argument,
          "digamma requires a positive finite argument");
  double result = 0.0;
  while (z < 10.0) {
    result -= 1.0 / z;
    z += 1.0;
  }
  const double inv = 1.0 / z;
  const double inv2 = inv * inv;
  // Asymptotic series with Bernoulli coefficients up to B_14.
  const double series =
      inv2 * (1.0 / 12.0 -
              inv2 * (1.0 / 120.0 -
                      inv2 * (1.0 / 252.0 -
                              inv2 * (1.0 / 240.0 -
                                      inv2 * (1.0 / 132.0 -
                                              inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
  return result + std::log(z) - 0.5 * inv - series;
}

double trigamma(double z) {
  require(z > 0.0 && std::isfinite(z), ErrorCode::invalid_argument,
          "trigamma requires a positive finite argument");
  double result = 0.0;
  while (z < 10.0) {
    result += 1.0 / (z * z);
    z += 1.0;
  }
  const double inv = 1.0 / z;
  const double inv2 = inv * inv;
  const double series =
      inv * (1.0 + inv * (0.5 +
                          inv * (1.0 / 6.0 -
                                 inv2 * (1.0 / 30.0 -
                                         inv2 * (1.0 / 42.0 -
                                                 inv2 * (1.0 / 30.0 -
                                                         inv2 * (5.0 / 66.0 -
                                                                 inv2 * (691.0 / 2730.0 -
                                                                         inv2 * 7.0 / 6.0))))))));
  return result + series;
}

double log_sum_exp(double a, double b) noexcept {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

double log_sum_exp(std::span<const double> values) noexcept {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(m)) return m;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - m);
  return m + std::log(sum);
}

double regularized_gamma_p(double a, double x) {
  require(a > 0.0 && x >= 0.0, ErrorCode::invalid_argument, "invalid incomplete gamma arguments");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return x < a + 1.0 ? gamma_p_series(a, x) : 1.0 - gamma_q_fraction(a, x);
}

double regularized_gamma_q(double a, double x) {
  require(a > 0.0 && x >= 0.0, ErrorCode::invalid_argument, "invalid incomplete gamma arguments");
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return x < a + 1.0 ? 1.0 - gamma_p_series(a, x) : gamma_q_fraction(a, x);
}

double std_normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double std_normal_sf(double x) noexcept { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double std_normal_quantile(double prob) {
  require(prob > 0.0 && prob < 1.0, ErrorCode::invalid_argument,
          "normal quantile requires a probability in (0, 1)");
  // Acklam's rational approximation, then one Halley refinement step.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double low = 0.02425;
  double x;
  if (prob < low) {
    const double q = std::sqrt(-2.0 * std::log(prob));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (prob <= 1.0 - low) {
    const double q = prob - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-prob));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Refine against whichever tail is represented more accurately.
  const double e = prob < 0.5 ? std_normal_cdf(x) - prob : (1.0 - prob) - std_normal_sf(x);
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

double chi2_cdf(double x, double df) {
  require(df > 0.0, ErrorCode::invalid_argument, "chi-square df must be positive");
  if (x <= 0.0) return 0.0;
  return regularized_gamma_p(0.5 * df, 0.5 * x);
}

double chi2_sf(double x, double df) {
  require(df > 0.0, ErrorCode::invalid_argument, "chi-square df must be positive");
  if (x <= 0.0) return 1.0;
  return regularized_gamma_q(0.5 * df, 0.5 * x);
}

double chi2_quantile(double prob, double df) {
  require(prob > 0.0 && prob < 1.0, ErrorCode::invalid_argument,
          "chi-square quantile requires a probability in (0, 1)");
  require(df > 0.0, ErrorCode::invalid_argument, "chi-square df must be positive");
  return prob > 0.5 ? chi2_solve(1.0 - prob, df, true) : chi2_solve(prob, df, false);
}

double chi2_upper_quantile(double alpha, double df) {
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::invalid_argument,
          "chi-square upper quantile requires alpha in (0, 1)");
  require(df > 0.0, ErrorCode::invalid_argument, "chi-square df must be positive");
  return alpha < 0.5 ? chi2_solve(alpha, df, true) : chi2_solve(1.0 - alpha, df, false);
}

double chi2_quantile_1df(double prob) { return chi2_quantile(prob, 1.0); }

double kolmogorov_sf(double x) noexcept {
  if (x <= 0.0) return 1.0;
  if (x < 1.18) {
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double cdf = 0.0;
    for (int k = 1; k < 50; ++k) {
      const double m = 2.0 * k - 1.0;
      cdf += std::exp(-m * m * pi2 / (8.0 * x * x));
    }
    cdf *= std::sqrt(2.0 * std::numbers::pi) / x;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sf = 0.0;
  for (int k = 1; k < 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sf += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sf, 0.0, 1.0);
}

KsResult ks_one_sample(std::span<const double> sample, const std::function<double(double)>& cdf) {
  require(!sample.empty(), ErrorCode::invalid_argument, "KS test needs a non-empty sample");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double stat = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    stat = std::max({stat, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  const double root_n = std::sqrt(n);
  return {stat, kolmogorov_sf((root_n + 0.12 + 0.11 / root_n) * stat)};
}

EppsSingletonResult epps_singleton(std::span<const double> sample_a,
                                   std::span<const double> sample_b) {
  require(!sample_a.empty() && !sample_b.empty(), ErrorCode::invalid_argument,
          "Epps-Singleton test needs two non-empty samples");
  const double na = static_cast<double>(sample_a.size());
  const double nb = static_cast<double>(sample_b.size());
  const double n = na + nb;

  std::vector<double> pooled(sample_a.begin(), sample_a.end());
  pooled.insert(pooled.end(), sample_b.begin(), sample_b.end());
  std::sort(pooled.begin(), pooled.end());
  const double semi_iqr =
      0.5 * (empirical_quantile(pooled, 0.75) - empirical_quantile(pooled, 0.25));
  require(semi_iqr > 0.0, ErrorCode::degenerate_sample,
          "pooled semi-interquartile range is zero");
  const double t1 = 0.4 / semi_iqr;
  const double t2 = 0.8 / semi_iqr;

  using Vec = Eigen::Vector4d;
  using Mat = Eigen::Matrix4d;
  auto features = [&](double x) {
    return Vec(std::cos(t1 * x), std::cos(t2 * x), std::sin(t1 * x), std::sin(t2 * x));
  };
  auto moments = [&](std::span<const double> s, Vec& mean, Mat& cov) {
    mean.setZero();
    for (double x : s) mean += features(x);
    mean /= static_cast<double>(s.size());
    cov.setZero();
    for (double x : s) {
      const Vec centred = features(x) - mean;
      cov.noalias() += centred * centred.transpose();
    }
    cov /= static_cast<double>(s.size());  // biased estimate
  };

  Vec mean_a, mean_b;
  Mat cov_a, cov_b;
  moments(sample_a, mean_a, cov_a);
  moments(sample_b, mean_b, cov_b);
  const Mat pooled_cov = (n / na) * cov_a + (n / nb) * cov_b;

  Eigen::SelfAdjointEigenSolver<Mat> eig(pooled_cov);
  const Vec values = eig.eigenvalues();
  const double cutoff = 1e-15 * values.cwiseAbs().maxCoeff();
  Mat pinv = Mat::Zero();
  int rank = 0;
  for (int k = 0; k < 4; ++k) {
    if (values[k] > cutoff) {
      pinv.noalias() += eig.eigenvectors().col(k) * eig.eigenvectors().col(k).transpose() / values[k];
      ++rank;
    }
  }
  if (rank == 0) return {0.0, 1.0, 0};

  const Vec diff = mean_a - mean_b;
  double w = std::max(0.0, n * diff.dot(pinv * diff));
  if (std::min(na, nb) < 25.0) {
    const double correction =
        1.0 / (1.0 + std::pow(n, -0.45) + 10.1 * (std::pow(na, -1.7) + std::pow(nb, -1.7)));
    w *= correction;
  }
  return {w, chi2_sf(w, rank), rank};
}

EppsSingletonResult epps_singleton(std::span<const std::int64_t> sample_a,
                                   std::span<const std::int64_t> sample_b) {
  const std::vector<double> a(sample_a.begin(), sample_a.end());
  const std::vector<double> b(sample_b.begin(), sample_b.end());
  return epps_singleton(std::span<const double>(a), std::span<const double>(b));
}

}  // namespace idscale
