#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "idscale/adaptive.hpp"
#include "idscale/datagen.hpp"
#include "idscale/error.hpp"
#include "idscale/specfun.hpp"
#include "oracles.hpp"

using namespace idscale;

namespace {

// Wilks statistic from the plain-volume formula, no log-space tricks.
double lrt_oracle(double d, double k, double r_i, double r_j) {
  const double omega = 2.0;  // any constant, it cancels
  const double vi = omega * std::pow(r_i, d);
  const double vj = omega * std::pow(r_j, d);
  return -2.0 * k * (std::log(vi) + std::log(vj) - 2.0 * std::log(vi + vj) + std::log(4.0));
}

const NeighborGraph& sine_graph() {
  static const NeighborGraph g = build_neighbor_graph(gen_sine_toy(1000, 0.025, 1), 351);
  return g;
}

const NeighborGraph& step_graph() {
  static const NeighborGraph g = build_neighbor_graph(gen_density_step_1d(2000, 10.0, 31), 101);
  return g;
}

EstimatorConfig quiet_config() {
  EstimatorConfig c;
  c.validate = false;
  return c;
}

}  // namespace

TEST(Lrt, EqualVolumesGiveZero) {
  EXPECT_EQ(lrt_statistic(2.0, 5, std::log(1.3), std::log(1.3)), 0.0);
}

TEST(Lrt, HandExample) {
  // d = 1, k = 1, r_i = 1, r_j = 2: D = -2 log(32 / 36).
  const double expected = -2.0 * std::log(32.0 / 36.0);
  EXPECT_NEAR(lrt_statistic(1.0, 1, 0.0, std::log(2.0)), expected, 1e-14);
  EXPECT_NEAR(expected, 0.235566071, 1e-9);
}

TEST(Lrt, MatchesPlainFormulaAndIsNonNegative) {
  std::mt19937_64 engine(41);
  std::uniform_real_distribution<double> u(0.2, 3.0);
  for (int t = 0; t < 200; ++t) {
    const double d = 0.5 + 4.0 * u(engine) / 3.0;
    const std::size_t k = 1 + t % 40;
    const double ri = u(engine), rj = u(engine);
    const double D = lrt_statistic(d, k, std::log(ri), std::log(rj));
    EXPECT_GE(D, 0.0);
    EXPECT_NEAR(D, lrt_oracle(d, static_cast<double>(k), ri, rj), 1e-9 * (1.0 + D));
    // Symmetric in the two radii.
    EXPECT_NEAR(D, lrt_statistic(d, k, std::log(rj), std::log(ri)), 1e-12 * (1.0 + D));
  }
}

TEST(Lrt, DependsOnlyOnDTimesLogRadius) {
  const double d = 3.0, li = 0.4, lj = -0.7;
  const double d2 = 1.7;
  EXPECT_NEAR(lrt_statistic(d, 12, li, lj), lrt_statistic(d2, 12, li * d / d2, lj * d / d2), 1e-11);
}

TEST(Threshold, Modes) {
  EstimatorConfig c;
  EXPECT_EQ(sequential_test_count(c), 349u);
  EXPECT_NEAR(rejection_threshold(c, 1000), 6.634896601021214, 1e-8);
  c.threshold_mode = ThresholdMode::bonferroni_h;
  EXPECT_NEAR(rejection_threshold(c, 1000), chi2_upper_quantile(0.01 / 349.0, 1.0), 1e-12);
  EXPECT_NEAR(rejection_threshold(c, 1000), 17.505133657108864, 1e-7);
  c.threshold_mode = ThresholdMode::bonferroni_n;
  EXPECT_NEAR(rejection_threshold(c, 5000), chi2_upper_quantile(0.01 / 5000.0, 1.0), 1e-12);
  c.threshold_mode = ThresholdMode::bonferroni_nh;
  EXPECT_NEAR(rejection_threshold(c, 5000), chi2_upper_quantile(0.01 / (5000.0 * 349.0), 1.0),
              1e-12);
  c.threshold_override = 3.5;
  EXPECT_EQ(rejection_threshold(c, 5000), 3.5);
}

TEST(Threshold, ParseAndPrint) {
  for (auto m : {ThresholdMode::fixed, ThresholdMode::bonferroni_h, ThresholdMode::bonferroni_n,
                 ThresholdMode::bonferroni_nh})
    EXPECT_EQ(parse_threshold_mode(to_string(m)), m);
  EXPECT_EQ(parse_threshold_mode("bonf-nh"), ThresholdMode::bonferroni_nh);
  EXPECT_THROW(parse_threshold_mode("holm"), Error);
}

TEST(Config, DefaultsAndChecks) {
  const EstimatorConfig c;
  EXPECT_EQ(c.alpha, 0.01);
  EXPECT_EQ(c.k_max, 350u);
  EXPECT_EQ(c.max_iter, 5u);
  EXPECT_EQ(c.delta, 1e-4);
  EXPECT_EQ(c.c_star, 0.2032);
  EXPECT_EQ(c.beta_ci, 0.05);
  EXPECT_EQ(c.required_depth(), 351u);
  EXPECT_NO_THROW(c.check());
  auto bad = c;
  bad.alpha = 1.0;
  EXPECT_THROW(bad.check(), Error);
  bad = c;
  bad.k_max = 1;
  EXPECT_THROW(bad.check(), Error);
  bad = c;
  bad.c_star = 0.0;
  EXPECT_THROW(bad.check(), Error);
}

TEST(KStar, UniformGridNeverRejects) {
  std::vector<double> xs(1001);
  std::iota(xs.begin(), xs.end(), 0.0);
  const auto g = build_neighbor_graph(Dataset(xs.size(), 1, xs), 61);
  const std::size_t centre = 500;
  ASSERT_EQ(g.source_index(centre), 500u);
  EXPECT_EQ(select_k_star(g, centre, 1.0, 60, 6.635), 60u);
}

TEST(KStar, DensityStepRejectsEarly) {
  const auto& g = step_graph();
  const Dataset data = gen_density_step_1d(2000, 10.0, 31);
  std::vector<std::size_t> near_step;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = data.point(g.source_index(i))[0];
    // Sparse side, just past the step: the dense segment enters the ball early.
    if (x >= 1.0 && x < 1.1) near_step.push_back(i);
  }
  ASSERT_GE(near_step.size(), 5u);
  double mean = 0.0;
  for (std::size_t i : near_step) mean += static_cast<double>(select_k_star(g, i, 1.0, 100, 6.635));
  mean /= static_cast<double>(near_step.size());
  EXPECT_LT(mean, 20.0);
}

TEST(KStar, LargerAlphaGivesSmallerNeighbourhoods) {
  const auto& g = step_graph();
  const double loose = chi2_upper_quantile(0.05, 1.0);
  const double strict = chi2_upper_quantile(0.001, 1.0);
  for (std::size_t i = 0; i < g.size(); ++i)
    ASSERT_LE(select_k_star(g, i, 1.0, 100, loose), select_k_star(g, i, 1.0, 100, strict));
}

TEST(KStar, RaisingThresholdNeverShrinksAndCapHolds) {
  const auto& g = sine_graph();
  for (std::size_t i = 0; i < g.size(); i += 7) {
    std::size_t prev = 0;
    for (double thr : {1.0, 3.0, 6.635, 12.0, 30.0}) {
      const std::size_t k = select_k_star(g, i, 1.5, 120, thr);
      EXPECT_GE(k, prev);
      EXPECT_GE(k, kMinTestedOrder);
      EXPECT_LE(k, 120u);
      prev = k;
    }
  }
}

TEST(KStar, NeedsDeepEnoughGraph) {
  const auto g = build_neighbor_graph(gen_sine_toy(200, 0.025, 2), 20);
  EXPECT_THROW(select_k_star(g, 0, 1.0, 20, 6.635), Error);
  EstimatorConfig c = quiet_config();
  c.k_max = 20;
  try {
    abide(g, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::insufficient_graph_depth);
  }
}

TEST(AdaptiveState, Invariants) {
  const auto& g = sine_graph();
  const auto s = compute_adaptive_state(g, 1.3, quiet_config());
  EXPECT_NEAR(s.tau, std::pow(0.2032, 1.0 / 1.3), 1e-15);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_GE(s.k_star[i], 2u);
    EXPECT_LE(s.k_star[i], 350u);
    EXPECT_EQ(s.kb_star[i], static_cast<std::int64_t>(s.k_star[i]) - 1);
    EXPECT_GE(s.ka_star[i], 0);
    EXPECT_LE(s.ka_star[i], s.kb_star[i]);
    EXPECT_EQ(s.t_b[i], g.distance(i, s.k_star[i]));
    EXPECT_LT(s.t_a[i], s.t_b[i]);
    EXPECT_EQ(s.ka_star[i], static_cast<std::int64_t>(count_within_open_ball(g, i, s.t_a[i])));
  }
  EXPECT_GE(s.saturation_fraction(350), 0.0);
  EXPECT_LE(s.saturation_fraction(350), 1.0);
}

TEST(AdaptiveState, IndependentOfThreads) {
  const auto& g = sine_graph();
  auto c = quiet_config();
  const auto a = compute_adaptive_state(g, 1.2, c);
  c.threads = 3;
  const auto b = compute_adaptive_state(g, 1.2, c);
  EXPECT_EQ(a.k_star, b.k_star);
  EXPECT_EQ(a.ka_star, b.ka_star);
}

TEST(Abide, SineToyTrajectory) {
  const auto r = abide(sine_graph(), EstimatorConfig{});
  ASSERT_GE(r.estimate.trace.size(), 2u);
  EXPECT_NEAR(r.estimate.trace.front().d, 2.0, 0.2);
  EXPECT_GE(r.estimate.d, 0.9);
  EXPECT_LE(r.estimate.d, 1.2);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.iterations_run, 5u);
  EXPECT_EQ(r.estimate.trace.size(), r.iterations_run + 1);
  EXPECT_LE(r.estimate.ci.lower, r.estimate.d);
  EXPECT_GE(r.estimate.ci.upper, r.estimate.d);
  ASSERT_TRUE(r.estimate.validation_p.has_value());
  EXPECT_GE(*r.estimate.validation_p, 0.0);
  EXPECT_LE(*r.estimate.validation_p, 1.0);
  const auto& last = r.estimate.trace.back();
  const auto& before = r.estimate.trace[r.estimate.trace.size() - 2];
  EXPECT_LT(std::abs(last.d - before.d), 1e-4);
}

TEST(Abide, FixedPointResidual) {
  // G is piecewise constant in d (k* and the counts are integers), so the
  // residual at d* is bounded by the jump size rather than by delta.
  const auto config = quiet_config();
  const auto r = abide(sine_graph(), config);
  ASSERT_TRUE(r.converged);
  EXPECT_LT(std::abs(abide_map(sine_graph(), r.estimate.d, config) - r.estimate.d), 1e-3);
  EXPECT_EQ(bide_closed_form(r.state.counts()), abide_map(sine_graph(), r.estimate.d, config));
}

TEST(Abide, DeterministicAndThreadIndependent) {
  auto c = EstimatorConfig{};
  c.seed = 9;
  const auto a = abide(sine_graph(), c);
  const auto b = abide(sine_graph(), c);
  EXPECT_EQ(a.estimate, b.estimate);
  c.threads = 4;
  const auto t = abide(sine_graph(), c);
  EXPECT_EQ(a.estimate, t.estimate);
}

TEST(Abide, NotConvergedWithOneIteration) {
  auto c = quiet_config();
  c.max_iter = 1;
  const auto r = abide(sine_graph(), c);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations_run, 1u);
  EXPECT_EQ(r.estimate.trace.size(), 2u);
}

TEST(Abide, ScaleInvariance) {
  const Dataset data = gen_sine_toy(600, 0.025, 3);
  auto c = quiet_config();
  c.k_max = 100;
  const auto a = abide(build_neighbor_graph(data, 101), c);
  const auto b = abide(build_neighbor_graph(oracle::scale_coords(data, 4.1), 101), c);
  EXPECT_NEAR(a.estimate.d, b.estimate.d, 1e-12 * a.estimate.d);
  EXPECT_EQ(a.state.k_star, b.state.k_star);
}

TEST(Babide, CloseToAbideWithManyCounts) {
  const auto g = build_neighbor_graph(gen_uniform_hypercube_periodic(3000, 3, 42), 151);
  auto c = quiet_config();
  c.k_max = 150;
  const auto a = abide(g, c);
  const auto b = babide(g, c);
  EXPECT_GT(a.state.counts().sum_b(), 1000);
  EXPECT_LT(std::abs(a.estimate.d - b.estimate.d), 0.01);
  EXPECT_LE(b.estimate.ci.lower, b.estimate.d);
  EXPECT_GE(b.estimate.ci.upper, b.estimate.d);
}

TEST(Agride, ReducesToTwoNNWithTwoNeighbours) {
  const auto& g = sine_graph();
  const std::vector<std::size_t> k2(g.size(), 2);
  EXPECT_NEAR(agride_update(g, k2).d, twonn_estimate(g).d, 1e-8);
}

TEST(Agride, TorusMonteCarlo) {
  const auto g = build_neighbor_graph(gen_uniform_hypercube_periodic(5000, 2, 43), 351);
  const auto r = agride(g, quiet_config());
  EXPECT_GE(r.estimate.d, 1.85);
  EXPECT_LE(r.estimate.d, 2.15);
  EXPECT_LE(r.estimate.ci.lower, r.estimate.d);
  EXPECT_GE(r.estimate.ci.upper, r.estimate.d);
}
