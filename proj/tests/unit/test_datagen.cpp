#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "idscale/adaptive.hpp"
#include "idscale/datagen.hpp"
#include "idscale/error.hpp"
#include "idscale/specfun.hpp"

using namespace idscale;

namespace {

std::vector<double> column(const Dataset& data, std::size_t c, std::size_t begin = 0,
                           std::size_t end = static_cast<std::size_t>(-1)) {
  std::vector<double> out;
  for (std::size_t i = begin; i < std::min(end, data.size()); ++i) out.push_back(data.point(i)[c]);
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double variance_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

TEST(GeneratorKind, ParseAndPrint) {
  for (auto k : {GeneratorKind::sine_toy, GeneratorKind::noisy_gaussian, GeneratorKind::moebius,
                 GeneratorKind::uniform_hypercube_periodic, GeneratorKind::density_step_1d})
    EXPECT_EQ(parse_generator_kind(to_string(k)), k);
  EXPECT_EQ(parse_generator_kind("hypercube"), GeneratorKind::uniform_hypercube_periodic);
  EXPECT_THROW(parse_generator_kind("spiral"), Error);
}

TEST(GeneratorSpec, Checks) {
  GeneratorSpec s;
  s.kind = GeneratorKind::noisy_gaussian;
  s.d = 5;
  s.D = 3;
  EXPECT_THROW(s.check(), Error);
  s.D = 5;
  s.sigma_eps = -1.0;
  EXPECT_THROW(s.check(), Error);
  s.sigma_eps = 0.0;
  EXPECT_NO_THROW(s.check());
}

TEST(SineToy, NoiselessPointsLieOnTheCurve) {
  const Dataset data = gen_sine_toy(1000, 0.0, 1);
  ASSERT_EQ(data.dim(), 2u);
  for (std::size_t i = 0; i < data.size(); ++i)
    EXPECT_EQ(data.point(i)[1], std::sin(data.point(i)[0]));
}

TEST(SineToy, FirstHalfMean) {
  const Dataset data = gen_sine_toy(1000, 0.025, 1);
  EXPECT_NEAR(mean_of(column(data, 0, 0, 500)), std::numbers::pi / 2.0, 0.15);
  EXPECT_NEAR(mean_of(column(data, 0, 500)), 5.0 * std::numbers::pi / 3.0, 0.075);
}

TEST(SineToy, TwoNNNearTwo) {
  const auto g = build_neighbor_graph(gen_sine_toy(1000, 0.025, 1), 2);
  EXPECT_NEAR(twonn_estimate(g).d, 2.0, 0.2);
}

TEST(NoisyGaussian, NoiselessExtraCoordinatesAreZero) {
  const Dataset data = gen_noisy_gaussian(200, 2, 6, 1.0, 0.0, 2);
  for (std::size_t i = 0; i < data.size(); ++i)
    for (std::size_t c = 2; c < 6; ++c) EXPECT_EQ(data.point(i)[c], 0.0);
}

TEST(NoisyGaussian, NoiseVariance) {
  const double sigma = 1e-3;
  const Dataset data = gen_noisy_gaussian(5000, 2, 10, 1.0, sigma, 3);
  for (std::size_t c = 2; c < 10; ++c)
    EXPECT_NEAR(variance_of(column(data, c)) / (sigma * sigma), 1.0, 0.1) << c;
  EXPECT_NEAR(variance_of(column(data, 0)), 1.0, 0.1);
}

TEST(NoisyGaussian, AbideNearTrueDimension) {
  const auto g = build_neighbor_graph(gen_noisy_gaussian(5000, 2, 100, 1.0, 1e-3, 4), 351);
  EstimatorConfig c;
  c.validate = false;
  const auto r = abide(g, c);
  EXPECT_GE(r.estimate.d, 1.85);
  EXPECT_LE(r.estimate.d, 2.2);
}

TEST(Moebius, NoiselessPointsOnTheSurface) {
  const auto s = gen_moebius_sample(2000, 0.0, 5, 5);
  for (std::size_t i = 0; i < s.data.size(); ++i) {
    const double u = s.u[i], v = s.v[i];
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 2.0 * std::numbers::pi);
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
    const auto p = s.data.point(i);
    const double w = 1.0 + (v / 2.0) * std::cos(u / 2.0);
    EXPECT_NEAR(p[0], w * std::cos(u), 1e-12);
    EXPECT_NEAR(p[1], w * std::sin(u), 1e-12);
    EXPECT_NEAR(p[2], (v / 2.0) * std::sin(u / 2.0), 1e-12);
    EXPECT_EQ(p[3], 0.0);
    EXPECT_EQ(p[4], 0.0);
  }
}

TEST(Moebius, ComponentCountsMatchWeights) {
  const auto config = MoebiusConfig::defaults();
  ASSERT_EQ(config.blobs.size(), 8u);
  const std::size_t n = 20000;
  const auto s = gen_moebius_sample(n, 0.0, 3, 6, config);
  std::vector<double> w{config.background_weight};
  double total = config.background_weight;
  for (const auto& b : config.blobs) {
    w.push_back(b.weight);
    total += b.weight;
  }
  for (std::size_t c = 0; c < w.size(); ++c) {
    const double p = w[c] / total;
    const double count = static_cast<double>(std::count(s.label.begin(), s.label.end(),
                                                        static_cast<int>(c) - 1));
    // 4-sigma multinomial band.
    EXPECT_NEAR(count / n, p, 4.0 * std::sqrt(p * (1.0 - p) / n)) << c;
  }
}

TEST(Moebius, Shape) {
  const Dataset data = gen_moebius(500, 1e-3, 20, 7);
  EXPECT_EQ(data.size(), 500u);
  EXPECT_EQ(data.dim(), 20u);
  EXPECT_THROW(gen_moebius(500, 1e-3, 2, 7), Error);
}

TEST(Hypercube, CoordinatesUniformAndPeriodic) {
  const Dataset data = gen_uniform_hypercube_periodic(2000, 5, 8);
  EXPECT_TRUE(data.periodic());
  for (double x : data.coords()) {
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 1.0);
  }
  int passing = 0;
  for (std::size_t c = 0; c < 5; ++c) {
    const auto r = ks_one_sample(column(data, c), [](double x) { return std::clamp(x, 0.0, 1.0); });
    if (r.p_value > 0.01) ++passing;
  }
  EXPECT_GE(passing, 4);
}

TEST(DensityStep, RatioOneIsUniform) {
  const Dataset data = gen_density_step_1d(4000, 1.0, 9);
  const auto r = ks_one_sample(column(data, 0), [](double x) { return std::clamp(x / 2.0, 0.0, 1.0); });
  EXPECT_GT(r.p_value, 0.001);
}

TEST(DensityStep, OccupancyMatchesRatio) {
  const std::size_t n = 10000;
  const Dataset data = gen_density_step_1d(n, 10.0, 10);
  double left = 0.0;
  for (double x : data.coords()) {
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 2.0);
    if (x < 1.0) left += 1.0;
  }
  const double p = 10.0 / 11.0;
  EXPECT_NEAR(left / n, p, 4.0 * std::sqrt(p * (1.0 - p) / n));
}

TEST(DensityStep, PointsNearTheStepHaveSmallKStar) {
  const Dataset data = gen_density_step_1d(3000, 10.0, 11);
  const auto g = build_neighbor_graph(data, 351);
  double sum = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (std::abs(data.point(g.source_index(i))[0] - 1.0) > 0.005) continue;
    sum += static_cast<double>(select_k_star(g, i, 1.0, 350, 6.635));
    ++count;
  }
  ASSERT_GT(count, 0);
  EXPECT_LT(sum / count, 35.0);
}

TEST(Generators, DeterministicAndSeedSensitive) {
  GeneratorSpec s;
  for (auto kind : {GeneratorKind::sine_toy, GeneratorKind::noisy_gaussian, GeneratorKind::moebius,
                    GeneratorKind::uniform_hypercube_periodic, GeneratorKind::density_step_1d}) {
    s.kind = kind;
    s.n = 300;
    s.d = 2;
    s.D = 4;
    s.sigma_eps = 0.01;
    s.seed = 5;
    const Dataset a = generate(s);
    const Dataset b = generate(s);
    EXPECT_TRUE(std::equal(a.coords().begin(), a.coords().end(), b.coords().begin()));
    s.seed = 6;
    const Dataset c = generate(s);
    EXPECT_FALSE(std::equal(a.coords().begin(), a.coords().end(), c.coords().begin()));
  }
}

TEST(Generators, NoiseCommutesWithGeneration) {
  const double sigma = 0.02;
  const std::size_t y[] = {1};
  const Dataset sine = add_gaussian_noise(gen_sine_toy(400, 0.0, 12), sigma, 12, y);
  const Dataset sine_direct = gen_sine_toy(400, sigma, 12);
  EXPECT_TRUE(std::equal(sine.coords().begin(), sine.coords().end(), sine_direct.coords().begin()));

  const Dataset gauss = add_gaussian_noise(gen_noisy_gaussian(400, 2, 7, 1.0, 0.0, 13), sigma, 13);
  const Dataset gauss_direct = gen_noisy_gaussian(400, 2, 7, 1.0, sigma, 13);
  EXPECT_TRUE(std::equal(gauss.coords().begin(), gauss.coords().end(), gauss_direct.coords().begin()));

  const Dataset mob = add_gaussian_noise(gen_moebius(400, 0.0, 6, 14), sigma, 14);
  const Dataset mob_direct = gen_moebius(400, sigma, 6, 14);
  EXPECT_TRUE(std::equal(mob.coords().begin(), mob.coords().end(), mob_direct.coords().begin()));
}
