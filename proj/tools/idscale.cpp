#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "idscale/cli/commands.hpp"
#include "idscale/cli/io.hpp"
#include "idscale/error.hpp"

using namespace idscale;
using namespace idscale::cli;

namespace {

// Raw option values; optional ones are read only when given on the command line.
struct EstimatorFlags {
  std::string method = "abide";
  double alpha = 0.01;
  std::string threshold_mode = "fixed";
  double threshold = 0.0;
  std::size_t k_max = 350;
  std::size_t max_iter = 5;
  double tol = 1e-4;
  double c_star = kOptimalVolumeRatio;
  double beta_ci = 0.05;
  std::uint64_t seed = 0;
  bool no_validate = false;
  double tau = 0.5;
  double t_b = 0.0;
  std::size_t k = 0;
  std::size_t n1 = 1;
  std::size_t n2 = 2;
  double alpha0 = 1.0;
  double beta0 = 1.0;
  CLI::Option* threshold_opt = nullptr;
  CLI::Option* tau_opt = nullptr;
  CLI::Option* tb_opt = nullptr;
  CLI::Option* k_opt = nullptr;

  void add_config(CLI::App* app) {
    app->add_option("--alpha", alpha, "Test level for the neighbourhood selection");
    app->add_option("--threshold-mode", threshold_mode, "fixed, bonf-h, bonf-n or bonf-nh");
    threshold_opt = app->add_option("--threshold", threshold, "Explicit rejection threshold D_thr");
    app->add_option("--kmax", k_max, "Largest neighbourhood order tested");
    app->add_option("--max-iter", max_iter, "Fixed-point iterations");
    app->add_option("--tol", tol, "Fixed-point tolerance");
    app->add_option("--c-star", c_star, "Volume ratio c* (tau = c*^(1/d))");
    app->add_option("--beta-ci", beta_ci, "Confidence level is 1 - beta");
    app->add_option("--seed", seed, "Seed for the validation sampler");
    app->add_flag("--no-validate", no_validate, "Skip the goodness-of-fit check");
  }

  void add_method(CLI::App* app) {
    app->add_option("--method", method, "twonn, bide-r, bide-k, gride, abide, agride, babide");
    tau_opt = app->add_option("--tau", tau, "Inner/outer radius ratio for bide-r and bide-k");
    tb_opt = app->add_option("--tb", t_b, "Outer radius for bide-r");
    k_opt = app->add_option("--k", k, "Neighbourhood order for bide-k");
    app->add_option("--n1", n1, "Inner order for gride");
    app->add_option("--n2", n2, "Outer order for gride");
    app->add_option("--alpha0", alpha0, "Beta prior alpha for babide");
    app->add_option("--beta0", beta0, "Beta prior beta for babide");
  }

  EstimatorConfig config(unsigned threads) const {
    EstimatorConfig c;
    c.alpha = alpha;
    c.threshold_mode = parse_threshold_mode(threshold_mode);
    if (threshold_opt && threshold_opt->count()) c.threshold_override = threshold;
    c.k_max = k_max;
    c.max_iter = max_iter;
    c.delta = tol;
    c.c_star = c_star;
    c.beta_ci = beta_ci;
    c.seed = seed;
    c.threads = threads;
    c.validate = !no_validate;
    return c;
  }

  EstimateOptions options(const std::string& name, unsigned threads) const {
    EstimateOptions o;
    o.method = name;
    o.config = config(threads);
    if (tau_opt && tau_opt->count()) o.tau = tau;
    if (tb_opt && tb_opt->count()) o.t_b = t_b;
    if (k_opt && k_opt->count()) o.k = k;
    o.n1 = n1;
    o.n2 = n2;
    o.alpha0 = alpha0;
    o.beta0 = beta0;
    return o;
  }
};

struct GeneratorFlags {
  std::string kind = "sine_toy";
  std::size_t n = 1000;
  std::size_t d = 2;
  std::size_t D = 0;
  double sigma_s = 1.0;
  double sigma_eps = -1.0;
  double ratio = 10.0;
  std::uint64_t seed = 0;
  std::string moebius_config;

  void add(CLI::App* app, const std::string& seed_flag) {
    app->add_option("--generator", kind,
                    "sine_toy, noisy_gaussian, moebius, uniform_hypercube_periodic, density_step_1d");
    app->add_option("--n", n, "Number of points");
    app->add_option("--d", d, "Intrinsic dimension (noisy_gaussian, hypercube)");
    app->add_option("--D", D, "Embedding dimension (noisy_gaussian, moebius)");
    app->add_option("--sigma-s", sigma_s, "Signal scale");
    app->add_option("--sigma-eps", sigma_eps, "Noise scale");
    app->add_option("--ratio", ratio, "Density ratio for density_step_1d");
    app->add_option(seed_flag, seed, "Generator seed");
    app->add_option("--moebius-config", moebius_config, "JSON file overriding the Moebius blobs");
  }

  GeneratorSpec spec() const {
    GeneratorSpec s;
    s.kind = parse_generator_kind(kind);
    s.n = n;
    s.d = d;
    s.sigma_s = sigma_s;
    s.ratio = ratio;
    s.seed = seed;
    switch (s.kind) {
      case GeneratorKind::sine_toy:
        s.D = 2;
        s.sigma_eps = sigma_eps < 0.0 ? 0.025 : sigma_eps;
        break;
      case GeneratorKind::moebius:
        s.D = D == 0 ? 20 : D;
        s.sigma_eps = sigma_eps < 0.0 ? 1e-3 : sigma_eps;
        break;
      case GeneratorKind::noisy_gaussian:
        s.D = D == 0 ? d : D;
        s.sigma_eps = sigma_eps < 0.0 ? 0.0 : sigma_eps;
        break;
      default:
        s.D = s.kind == GeneratorKind::density_step_1d ? 1 : d;
        s.sigma_eps = 0.0;
    }
    return s;
  }

  MoebiusConfig moebius() const {
    if (moebius_config.empty()) return MoebiusConfig::defaults();
    std::ifstream in(moebius_config);
    require(in.good(), ErrorCode::invalid_argument, "cannot open '" + moebius_config + "'");
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      fail(ErrorCode::parse_error, e.what());
    }
    return moebius_from_json(j);
  }
};

void emit(const std::string& text, const std::string& output) {
  if (output.empty() || output == "-") {
    std::cout << text << '\n';
    return;
  }
  std::ofstream out(output);
  require(out.good(), ErrorCode::invalid_argument, "cannot write '" + output + "'");
  out << text << '\n';
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) items.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return items;
}

unsigned resolve_thread_flag(unsigned flag) {
  if (const char* env = std::getenv("IDSCALE_THREADS"); env && *env) {
    try {
      return static_cast<unsigned>(std::stoul(env));
    } catch (const std::exception&) {
      fail(ErrorCode::invalid_argument, std::string("IDSCALE_THREADS is not a number: ") + env);
    }
  }
  return flag;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("idscale");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Nearest-neighbour intrinsic dimension estimation"};
  app.require_subcommand(1);
  unsigned threads = 0;
  std::string log_level = "warn";
  app.add_option("--threads", threads, "Worker threads (0 = all cores); IDSCALE_THREADS overrides");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off");

  // estimate
  auto* est = app.add_subcommand("estimate", "Estimate the intrinsic dimension of a CSV dataset");
  EstimatorFlags est_flags;
  std::string est_input;
  std::string est_output = "-";
  std::string est_periodic;
  std::size_t est_drop = 0;
  est_flags.add_method(est);
  est_flags.add_config(est);
  est->add_option("--input", est_input, "CSV file, one point per row")->required();
  est->add_option("--periodic", est_periodic, "Per-column periods p1,p2,... (one value = all)");
  est->add_option("--drop-last-columns", est_drop, "Ignore this many trailing columns");
  est->add_option("--output", est_output, "Report path, '-' for stdout");

  // scan
  auto* scan = app.add_subcommand("scan", "BIDE over a grid of radii or neighbourhood sizes");
  EstimatorFlags scan_flags;
  std::string scan_input;
  std::string scan_output = "-";
  std::string scan_periodic;
  std::string scan_mode = "k";
  std::string scan_format = "json";
  std::string scan_k_list;
  std::size_t scan_k_min = 2, scan_k_max = 0, scan_k_step = 1;
  double scan_tb_min = 0.0, scan_tb_max = 0.0, scan_tau = 0.5;
  std::size_t scan_points = 20;
  bool scan_no_reference = false;
  scan_flags.add_config(scan);
  scan->add_option("--input", scan_input, "CSV file")->required();
  scan->add_option("--periodic", scan_periodic, "Per-column periods");
  scan->add_option("--mode", scan_mode, "k or radius");
  scan->add_option("--k-list", scan_k_list, "Explicit k grid, e.g. 2,5,10");
  scan->add_option("--k-min", scan_k_min, "Smallest k");
  auto* scan_k_max_opt = scan->add_option("--k-max", scan_k_max, "Largest k");
  scan->add_option("--k-step", scan_k_step, "k increment");
  auto* tb_min_opt = scan->add_option("--tb-min", scan_tb_min, "Smallest radius");
  auto* tb_max_opt = scan->add_option("--tb-max", scan_tb_max, "Largest radius");
  scan->add_option("--points", scan_points, "Number of log-spaced radii");
  auto* scan_tau_opt = scan->add_option("--tau", scan_tau, "Inner/outer radius ratio");
  scan->add_flag("--no-reference", scan_no_reference, "Skip the ABIDE reference run");
  scan->add_option("--format", scan_format, "json or csv");
  scan->add_option("--output", scan_output, "Output path, '-' for stdout");

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "Monte Carlo replicas of a synthetic generator");
  EstimatorFlags bench_flags;
  GeneratorFlags bench_gen;
  std::size_t replicas = 10;
  bool normality = false;
  double d_true = 0.0;
  std::string bench_output = "-";
  bench_flags.add_method(bench);
  bench_flags.add_config(bench);
  bench_gen.add(bench, "--gen-seed");
  bench->add_option("--replicas", replicas, "Number of replicas");
  bench->add_flag("--normality", normality, "Emit z = sqrt(n I)(d - d_true) and a KS test");
  auto* d_true_opt = bench->add_option("--d-true", d_true, "True dimension for --normality");
  bench->add_option("--output", bench_output, "Output path, '-' for stdout");

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset to CSV");
  GeneratorFlags gen_flags;
  std::string gen_output;
  std::string gen_sidecar;
  gen_flags.add(gen, "--seed");
  gen->add_option("--from-sidecar", gen_sidecar, "Regenerate from a sidecar JSON");
  gen->add_option("--output", gen_output, "CSV path")->required();

  // fetch-optdigits
  auto* fetch = app.add_subcommand("fetch-optdigits", "Download the OptDigits training set (network)");
  std::string fetch_output = "optdigits.csv";
  std::string fetch_url = kOptdigitsUrl;
  fetch->add_option("--output", fetch_output, "CSV path");
  fetch->add_option("--url", fetch_url, "Source URL");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", "invalid-argument"}, {"message", e.what()}}.dump() << '\n';
    return exit_code(ErrorCode::invalid_argument);
  }

  try {
    spdlog::set_level(spdlog::level::from_str(log_level));
    threads = resolve_thread_flag(threads);

    if (*est) {
      std::optional<std::vector<double>> periods;
      if (!est_periodic.empty()) periods = parse_period_list(est_periodic);
      const Dataset data = load_dataset(est_input, periods, est_drop);
      RunReport report = run_estimate(data, est_flags.options(est_flags.method, threads));
      report.config["input"] = est_input;
      emit(json(report).dump(2), est_output);
    } else if (*scan) {
      std::optional<std::vector<double>> periods;
      if (!scan_periodic.empty()) periods = parse_period_list(scan_periodic);
      const Dataset data = load_dataset(scan_input, periods);
      ScanOptions o;
      o.mode = scan_mode;
      o.config = scan_flags.config(threads);
      o.points = scan_points;
      o.reference = !scan_no_reference;
      if (scan_tau_opt->count()) o.tau = scan_tau;
      if (tb_min_opt->count()) o.t_b_min = scan_tb_min;
      if (tb_max_opt->count()) o.t_b_max = scan_tb_max;
      if (!scan_k_list.empty()) {
        for (const auto& item : split_list(scan_k_list)) o.k_values.push_back(std::stoul(item));
      } else if (scan_k_max_opt->count()) {
        require(scan_k_step >= 1 && scan_k_min <= scan_k_max, ErrorCode::invalid_argument,
                "need k-min <= k-max and k-step >= 1");
        for (std::size_t k = scan_k_min; k <= scan_k_max; k += scan_k_step) o.k_values.push_back(k);
      }
      require(scan_format == "json" || scan_format == "csv", ErrorCode::invalid_argument,
              "format must be json or csv");
      const json result = run_scan(data, o);
      emit(scan_format == "json" ? result.dump(2) : scan_to_csv(result), scan_output);
    } else if (*bench) {
      BenchmarkOptions o;
      o.generator = bench_gen.spec();
      o.moebius = bench_gen.moebius();
      o.replicas = replicas;
      o.normality = normality;
      o.threads = threads;
      if (d_true_opt->count()) o.d_true = d_true;
      o.methods.clear();
      for (const auto& name : split_list(bench_flags.method))
        o.methods.push_back(bench_flags.options(name, 1));
      const auto summaries = run_benchmark(o);
      emit(json(summaries).dump(2), bench_output);
    } else if (*gen) {
      GeneratorSpec spec;
      MoebiusConfig moebius;
      if (!gen_sidecar.empty()) {
        std::ifstream in(gen_sidecar);
        require(in.good(), ErrorCode::invalid_argument, "cannot open '" + gen_sidecar + "'");
        json side;
        try {
          in >> side;
        } catch (const json::exception& e) {
          fail(ErrorCode::parse_error, e.what());
        }
        generator_from_json(side.contains("generator") ? side.at("generator") : side, spec, moebius);
      } else {
        spec = gen_flags.spec();
        moebius = gen_flags.moebius();
      }
      std::cout << run_generate(spec, moebius, gen_output).dump(2) << '\n';
    } else if (*fetch) {
      std::cout << run_fetch_optdigits(fetch_output, fetch_url).dump(2) << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << error_json(e).dump() << '\n';
    return exit_code_for(e);
  }
  return 0;
}
