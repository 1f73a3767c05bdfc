#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "idscale/adaptive.hpp"
#include "idscale/cli/report.hpp"
#include "idscale/datagen.hpp"
#include "idscale/geometry.hpp"

namespace idscale::cli {

// twonn, bide-r, bide-k, gride, abide, agride, babide
bool is_known_method(const std::string& method);
bool is_adaptive_method(const std::string& method);

struct EstimateOptions {
  std::string method = "abide";
  EstimatorConfig config;
  std::optional<double> tau;  // bide-r / bide-k; default c*^(1/d_2NN)
  std::optional<double> t_b;  // bide-r
  std::optional<std::size_t> k;  // bide-k
  std::size_t n1 = 1;            // gride
  std::size_t n2 = 2;
  double alpha0 = 1.0;  // babide prior
  double beta0 = 1.0;

  void check() const;
};

json config_echo(const EstimateOptions& options);

// Neighbour graph deep enough for every listed method on this dataset.
// Adaptive methods get k_max clamped to n - 2 (with a warning) on small
// inputs; fixed-radius scans deepen the graph until t_B is covered.
struct PreparedGraph {
  NeighborGraph graph;
  std::size_t n_input = 0;
  double seconds = 0.0;
};
PreparedGraph prepare_graph(const Dataset& data, const std::vector<EstimateOptions>& methods,
                            unsigned threads, std::optional<double> radius_horizon = {});

// Clamps k_max to what the graph can support.
EstimateOptions fit_to_graph(EstimateOptions options, const NeighborGraph& graph);

RunReport estimate_on_graph(const NeighborGraph& graph, const EstimateOptions& options);
RunReport run_estimate(const Dataset& data, const EstimateOptions& options);

struct ScanOptions {
  std::string mode = "k";  // "k" or "radius"
  std::vector<std::size_t> k_values;  // default 2..min(100, n-2)
  std::optional<double> t_b_min;      // default median r_{i,1}
  std::optional<double> t_b_max;      // default median r_{i,min(100, n-1)}
  std::size_t points = 20;
  std::optional<double> tau;
  EstimatorConfig config;
  bool reference = true;  // ABIDE starred values for overlay
};

json run_scan(const Dataset& data, const ScanOptions& options);
// One row per scale: scale,d,lower,upper,mean_kb,validation_p,error.
std::string scan_to_csv(const json& scan);

struct BenchmarkOptions {
  GeneratorSpec generator;
  MoebiusConfig moebius = MoebiusConfig::defaults();
  std::size_t replicas = 10;
  std::vector<EstimateOptions> methods{EstimateOptions{}};
  bool normality = false;
  std::optional<double> d_true;  // default: the generator's true dimension
  unsigned threads = 0;
};

double true_dimension(const GeneratorSpec& spec);
std::vector<MonteCarloSummary> run_benchmark(const BenchmarkOptions& options);

json generator_to_json(const GeneratorSpec& spec, const MoebiusConfig& moebius);
void generator_from_json(const json& j, GeneratorSpec& spec, MoebiusConfig& moebius);
json moebius_to_json(const MoebiusConfig& config);
MoebiusConfig moebius_from_json(const json& j);

// Writes the CSV plus `<output>.json` describing the generator; returns the
// sidecar contents.
json run_generate(const GeneratorSpec& spec, const MoebiusConfig& moebius,
                  const std::filesystem::path& output);
std::filesystem::path sidecar_path(const std::filesystem::path& output);

inline constexpr const char* kOptdigitsUrl =
    "https://archive.ics.uci.edu/ml/machine-learning-databases/optdigits/optdigits.tra";

// Downloads the OptDigits training file with curl and stores the 64 feature
// columns as CSV (the class label column is dropped).
json run_fetch_optdigits(const std::filesystem::path& output, const std::string& url = kOptdigitsUrl);

// {"error": kebab-case code, "message": ..., "trace": [...]?}
json error_json(const std::exception& e);
int exit_code_for(const std::exception& e);

}  // namespace idscale::cli
