#include "idscale/datagen.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "idscale/error.hpp"
#include "idscale/rng.hpp"

namespace idscale {

namespace {

constexpr std::uint64_t kSignalStream = 0;
constexpr std::uint64_t kNoiseStream = 1;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_size(std::size_t n) {
  require(n >= 2, ErrorCode::invalid_argument, "generators need n >= 2");
}

void require_sigma(double sigma, const char* name) {
  require(std::isfinite(sigma) && sigma >= 0.0, ErrorCode::invalid_argument,
          std::string(name) + " must be finite and nonnegative");
}

}  // namespace

std::string_view to_string(GeneratorKind kind) noexcept {
  switch (kind) {
    case GeneratorKind::sine_toy: return "sine_toy";
    case GeneratorKind::noisy_gaussian: return "noisy_gaussian";
    case GeneratorKind::moebius: return "moebius";
    case GeneratorKind::uniform_hypercube_periodic: return "uniform_hypercube_periodic";
    case GeneratorKind::density_step_1d: return "density_step_1d";
  }
  return "sine_toy";
}

GeneratorKind parse_generator_kind(std::string_view text) {
  for (auto kind : {GeneratorKind::sine_toy, GeneratorKind::noisy_gaussian, GeneratorKind::moebius,
                    GeneratorKind::uniform_hypercube_periodic, GeneratorKind::density_step_1d}) {
    if (text == to_string(kind)) return kind;
  }
  if (text == "sine") return GeneratorKind::sine_toy;
  if (text == "gaussian") return GeneratorKind::noisy_gaussian;
  if (text == "hypercube" || text == "uniform") return GeneratorKind::uniform_hypercube_periodic;
  if (text == "step") return GeneratorKind::density_step_1d;
  fail(ErrorCode::invalid_argument, "unknown generator '" + std::string(text) + "'");
}

void GeneratorSpec::check() const {
  require_size(n);
  require_sigma(sigma_s, "sigma_s");
  require_sigma(sigma_eps, "sigma_eps");
  switch (kind) {
    case GeneratorKind::noisy_gaussian:
      require(d >= 1 && d <= D, ErrorCode::invalid_argument, "need 1 <= d <= D");
      break;
    case GeneratorKind::moebius:
      require(D >= 3, ErrorCode::invalid_argument, "the Moebius strip needs D >= 3");
      break;
    case GeneratorKind::uniform_hypercube_periodic:
      require(d >= 1, ErrorCode::invalid_argument, "need d >= 1");
      break;
    case GeneratorKind::density_step_1d:
      require(std::isfinite(ratio) && ratio > 0.0, ErrorCode::invalid_argument,
              "density ratio must be positive");
      break;
    case GeneratorKind::sine_toy: break;
  }
}

MoebiusConfig MoebiusConfig::defaults() {
  MoebiusConfig c;
  c.background_weight = 0.25;
  c.blobs = {
      {0.5, -0.4, 0.15, 0.10, 0.12}, {1.3, 0.5, 0.30, 0.15, 0.10}, {2.2, -0.1, 0.10, 0.25, 0.10},
      {3.0, 0.6, 0.20, 0.08, 0.08},  {3.8, -0.5, 0.35, 0.20, 0.10}, {4.6, 0.2, 0.08, 0.08, 0.06},
      {5.3, -0.3, 0.25, 0.30, 0.10}, {5.9, 0.55, 0.12, 0.12, 0.09},
  };
  return c;
}

void MoebiusConfig::check() const {
  require(std::isfinite(background_weight) && background_weight >= 0.0,
          ErrorCode::invalid_argument, "background weight must be nonnegative");
  double total = background_weight;
  for (const auto& b : blobs) {
    require(std::isfinite(b.u) && std::isfinite(b.v), ErrorCode::invalid_argument,
            "blob centres must be finite");
    require(b.v >= -1.0 && b.v <= 1.0, ErrorCode::invalid_argument,
            "blob centres need v in [-1, 1]");
    require(b.sigma_u > 0.0 && b.sigma_v > 0.0, ErrorCode::invalid_argument,
            "blob widths must be positive");
    require(std::isfinite(b.weight) && b.weight >= 0.0, ErrorCode::invalid_argument,
            "blob weights must be nonnegative");
    total += b.weight;
  }
  require(total > 0.0, ErrorCode::invalid_argument, "mixture weights sum to zero");
}

std::array<double, 3> moebius_point(double u, double v) {
  const double w = 1.0 + 0.5 * v * std::cos(0.5 * u);
  return {w * std::cos(u), w * std::sin(u), 0.5 * v * std::sin(0.5 * u)};
}

Dataset add_gaussian_noise(const Dataset& data, double sigma, std::uint64_t seed,
                           std::span<const std::size_t> columns) {
  require_sigma(sigma, "noise scale");
  const std::size_t dim = data.dim();
  std::vector<std::size_t> cols(columns.begin(), columns.end());
  if (cols.empty()) {
    cols.resize(dim);
    for (std::size_t c = 0; c < dim; ++c) cols[c] = c;
  }
  for (std::size_t c : cols)
    require(c < dim, ErrorCode::invalid_argument, "noise column out of range");
  std::vector<double> coords(data.coords().begin(), data.coords().end());
  if (sigma > 0.0) {
    auto engine = make_engine(seed, kNoiseStream);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < data.size(); ++i)
      for (std::size_t c : cols) coords[i * dim + c] += sigma * normal(engine);
  }
  return Dataset(data.size(), dim, std::move(coords), data.metric());
}

Dataset gen_sine_toy(std::size_t n, double sigma_eps, std::uint64_t seed) {
  require_size(n);
  require_sigma(sigma_eps, "sigma_eps");
  auto engine = make_engine(seed, kSignalStream);
  std::normal_distribution<double> first(0.5 * std::numbers::pi, 1.0);
  std::normal_distribution<double> second(5.0 * std::numbers::pi / 3.0, 0.5);
  const std::size_t half = n / 2;
  std::vector<double> coords(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = i < half ? first(engine) : second(engine);
    coords[2 * i] = x;
    coords[2 * i + 1] = std::sin(x);
  }
  Dataset clean(n, 2, std::move(coords));
  const std::size_t y_column[] = {1};
  return add_gaussian_noise(clean, sigma_eps, seed, y_column);
}

Dataset gen_noisy_gaussian(std::size_t n, std::size_t d, std::size_t D, double sigma_s,
                           double sigma_eps, std::uint64_t seed) {
  require_size(n);
  require(d >= 1 && d <= D, ErrorCode::invalid_argument, "need 1 <= d <= D");
  require_sigma(sigma_s, "sigma_s");
  require_sigma(sigma_eps, "sigma_eps");
  auto engine = make_engine(seed, kSignalStream);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> coords(n * D, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) coords[i * D + c] = sigma_s * normal(engine);
  return add_gaussian_noise(Dataset(n, D, std::move(coords)), sigma_eps, seed);
}

MoebiusSample gen_moebius_sample(std::size_t n, double sigma_eps, std::size_t D,
                                 std::uint64_t seed, const MoebiusConfig& config) {
  require_size(n);
  require(D >= 3, ErrorCode::invalid_argument, "the Moebius strip needs D >= 3");
  require_sigma(sigma_eps, "sigma_eps");
  config.check();

  std::vector<double> weights{config.background_weight};
  for (const auto& b : config.blobs) weights.push_back(b.weight);
  std::discrete_distribution<int> component(weights.begin(), weights.end());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto engine = make_engine(seed, kSignalStream);

  MoebiusSample s{Dataset(2, 1, {0.0, 1.0}), std::vector<double>(n), std::vector<double>(n),
                  std::vector<int>(n)};
  std::vector<double> coords(n * D, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = component(engine) - 1;
    double u = 0.0;
    double v = 0.0;
    if (label < 0) {
      u = kTwoPi * unit(engine);
      v = 2.0 * unit(engine) - 1.0;
    } else {
      const auto& b = config.blobs[static_cast<std::size_t>(label)];
      u = std::fmod(b.u + b.sigma_u * normal(engine), kTwoPi);
      if (u < 0.0) u += kTwoPi;
      if (u >= kTwoPi) u = 0.0;
      do {
        v = b.v + b.sigma_v * normal(engine);
      } while (v < -1.0 || v > 1.0);
    }
    s.u[i] = u;
    s.v[i] = v;
    s.label[i] = label;
    const auto p = moebius_point(u, v);
    for (std::size_t c = 0; c < 3; ++c) coords[i * D + c] = p[c];
  }
  s.data = add_gaussian_noise(Dataset(n, D, std::move(coords)), sigma_eps, seed);
  return s;
}

Dataset gen_moebius(std::size_t n, double sigma_eps, std::size_t D, std::uint64_t seed,
                    const MoebiusConfig& config) {
  return gen_moebius_sample(n, sigma_eps, D, seed, config).data;
}

Dataset gen_uniform_hypercube_periodic(std::size_t n, std::size_t d, std::uint64_t seed) {
  require_size(n);
  require(d >= 1, ErrorCode::invalid_argument, "need d >= 1");
  auto engine = make_engine(seed, kSignalStream);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> coords(n * d);
  for (double& x : coords) x = unit(engine);
  return Dataset(n, d, std::move(coords), Periodic{std::vector<double>(d, 1.0)});
}

Dataset gen_density_step_1d(std::size_t n, double ratio, std::uint64_t seed) {
  require_size(n);
  require(std::isfinite(ratio) && ratio > 0.0, ErrorCode::invalid_argument,
          "density ratio must be positive");
  auto engine = make_engine(seed, kSignalStream);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double p_left = ratio / (1.0 + ratio);
  std::vector<double> coords(n);
  for (double& x : coords) {
    const bool left = unit(engine) < p_left;
    x = (left ? 0.0 : 1.0) + unit(engine);
  }
  return Dataset(n, 1, std::move(coords));
}

Dataset generate(const GeneratorSpec& spec, const MoebiusConfig& moebius) {
  spec.check();
  switch (spec.kind) {
    case GeneratorKind::sine_toy: return gen_sine_toy(spec.n, spec.sigma_eps, spec.seed);
    case GeneratorKind::noisy_gaussian:
      return gen_noisy_gaussian(spec.n, spec.d, spec.D, spec.sigma_s, spec.sigma_eps, spec.seed);
    case GeneratorKind::moebius: return gen_moebius(spec.n, spec.sigma_eps, spec.D, spec.seed, moebius);
    case GeneratorKind::uniform_hypercube_periodic:
      return gen_uniform_hypercube_periodic(spec.n, spec.d, spec.seed);
    case GeneratorKind::density_step_1d: return gen_density_step_1d(spec.n, spec.ratio, spec.seed);
  }
  fail(ErrorCode::invalid_argument, "unknown generator");
}

}  // namespace idscale
