#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "idscale/geometry.hpp"

namespace idscale {

enum class GeneratorKind { sine_toy, noisy_gaussian, moebius, uniform_hypercube_periodic, density_step_1d };

std::string_view to_string(GeneratorKind kind) noexcept;
GeneratorKind parse_generator_kind(std::string_view text);

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::sine_toy;
  std::size_t n = 1000;
  std::size_t d = 2;
  std::size_t D = 2;
  double sigma_s = 1.0;
  double sigma_eps = 0.0;
  double ratio = 10.0;  // density_step_1d only
  std::uint64_t seed = 0;

  void check() const;
};

// One Gaussian blob of the Moebius base density, in (u, v) coordinates.
struct MoebiusBlob {
  double u = 0.0;
  double v = 0.0;
  double sigma_u = 0.1;
  double sigma_v = 0.1;
  double weight = 0.1;
};

struct MoebiusConfig {
  double background_weight = 0.25;
  std::vector<MoebiusBlob> blobs;

  // Uniform background plus eight blobs of different sizes and weights.
  static MoebiusConfig defaults();
  void check() const;
};

struct MoebiusSample {
  Dataset data;
  std::vector<double> u;
  std::vector<double> v;
  std::vector<int> label;  // -1 background, otherwise blob index
};

// Point on the strip for parameters (u, v), u in [0, 2pi), v in [-1, 1].
std::array<double, 3> moebius_point(double u, double v);

// Adds iid N(0, sigma^2) to the listed columns (all columns when empty).
// Draws come from a stream of `seed` reserved for noise, so generating with
// sigma_eps = 0 and calling this afterwards matches generating with noise.
Dataset add_gaussian_noise(const Dataset& data, double sigma, std::uint64_t seed,
                           std::span<const std::size_t> columns = {});

// n x 2: first half x ~ N(pi/2, 1), second half x ~ N(5pi/3, 0.5^2),
// y = sin(x) + N(0, sigma_eps^2).
Dataset gen_sine_toy(std::size_t n, double sigma_eps, std::uint64_t seed);

// n x D: N(0, sigma_s^2) signal on the first d coordinates plus noise on all.
Dataset gen_noisy_gaussian(std::size_t n, std::size_t d, std::size_t D, double sigma_s,
                           double sigma_eps, std::uint64_t seed);

MoebiusSample gen_moebius_sample(std::size_t n, double sigma_eps, std::size_t D,
                                 std::uint64_t seed,
                                 const MoebiusConfig& config = MoebiusConfig::defaults());
Dataset gen_moebius(std::size_t n, double sigma_eps, std::size_t D, std::uint64_t seed,
                    const MoebiusConfig& config = MoebiusConfig::defaults());

// Uniform on [0, 1)^d with period 1 in every coordinate.
Dataset gen_uniform_hypercube_periodic(std::size_t n, std::size_t d, std::uint64_t seed);

// Uniform on [0, 1) with density `ratio` times that of [1, 2).
Dataset gen_density_step_1d(std::size_t n, double ratio, std::uint64_t seed);

Dataset generate(const GeneratorSpec& spec, const MoebiusConfig& moebius = MoebiusConfig::defaults());

}  // namespace idscale
