#include "idscale/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "idscale/cli/io.hpp"
#include "idscale/error.hpp"
#include "idscale/estimators.hpp"
#include "idscale/parallel.hpp"
#include "idscale/rng.hpp"
#include "idscale/specfun.hpp"
#include "idscale/validation.hpp"

namespace idscale::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

constexpr std::size_t kInitialRadiusDepth = 32;
constexpr std::size_t kDefaultScanDepth = 100;

double default_tau(const NeighborGraph& graph, double c_star) {
  return std::pow(c_star, 1.0 / twonn_estimate(graph).d);
}

std::optional<double> validation_for(const BinomialCounts& counts, double d, std::uint64_t seed) {
  if (!(d > 0.0)) return std::nullopt;
  try {
    return validate_model(counts.k_a, counts.k_b, d, counts.tau, seed).p_value;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::degenerate_sample) throw;
    return std::nullopt;
  }
}

double median_distance(const NeighborGraph& graph, std::size_t order) {
  std::vector<double> r(graph.size());
  for (std::size_t i = 0; i < graph.size(); ++i) r[i] = graph.distance(i, order);
  std::sort(r.begin(), r.end());
  return empirical_quantile(r, 0.5);
}

bool covers(const NeighborGraph& graph, double radius) {
  for (std::size_t i = 0; i < graph.size(); ++i)
    if (graph.distance(i, graph.depth()) < radius) return false;
  return true;
}

std::size_t method_depth(const EstimateOptions& o, std::size_t max_depth) {
  if (o.method == "twonn") return 2;
  if (o.method == "gride") return o.n2;
  if (o.method == "bide-k") return std::min(o.k.value_or(1) + 1, max_depth);
  if (o.method == "bide-r") return std::min(kInitialRadiusDepth, max_depth);
  return std::min(o.config.required_depth(), max_depth);
}

}  // namespace

bool is_known_method(const std::string& method) {
  return method == "twonn" || method == "bide-r" || method == "bide-k" || method == "gride" ||
         is_adaptive_method(method);
}

bool is_adaptive_method(const std::string& method) {
  return method == "abide" || method == "agride" || method == "babide";
}

void EstimateOptions::check() const {
  require(is_known_method(method), ErrorCode::invalid_argument, "unknown method '" + method + "'");
  config.check();
  if (tau) require(*tau > 0.0 && *tau < 1.0, ErrorCode::invalid_argument, "tau must lie in (0, 1)");
  if (method == "bide-r")
    require(t_b && *t_b > 0.0 && std::isfinite(*t_b), ErrorCode::invalid_argument,
            "bide-r needs a positive --tb");
  if (method == "bide-k") require(k && *k >= 1, ErrorCode::invalid_argument, "bide-k needs --k >= 1");
  if (method == "gride")
    require(n1 >= 1 && n2 > n1, ErrorCode::invalid_argument, "gride needs n2 > n1 >= 1");
  if (method == "babide")
    require(alpha0 > 0.0 && beta0 > 0.0, ErrorCode::invalid_argument,
            "Beta prior parameters must be positive");
}

json config_echo(const EstimateOptions& o) {
  const auto& c = o.config;
  json j{{"method", o.method},
         {"alpha", c.alpha},
         {"threshold_mode", std::string(to_string(c.threshold_mode))},
         {"threshold_override", c.threshold_override ? json(*c.threshold_override) : json(nullptr)},
         {"k_max", c.k_max},
         {"max_iter", c.max_iter},
         {"delta", c.delta},
         {"c_star", c.c_star},
         {"beta_ci", c.beta_ci},
         {"seed", c.seed},
         {"validate", c.validate}};
  if (o.tau) j["tau"] = *o.tau;
  if (o.t_b) j["t_b"] = *o.t_b;
  if (o.k) j["k"] = *o.k;
  if (o.method == "gride") {
    j["n1"] = o.n1;
    j["n2"] = o.n2;
  }
  if (o.method == "babide") {
    j["alpha0"] = o.alpha0;
    j["beta0"] = o.beta0;
  }
  return j;
}

PreparedGraph prepare_graph(const Dataset& data, const std::vector<EstimateOptions>& methods,
                            unsigned threads, std::optional<double> radius_horizon) {
  const auto start = Clock::now();
  Deduplicated dedup = remove_duplicates(data);
  if (dedup.removed > 0)
    spdlog::warn("removed {} duplicate point(s) before neighbour search", dedup.removed);
  const std::size_t max_depth = dedup.dataset.size() - 1;
  std::size_t depth = 1;
  for (const auto& m : methods) {
    depth = std::max(depth, method_depth(m, max_depth));
    if (m.method == "bide-r" && m.t_b)
      radius_horizon = std::max(radius_horizon.value_or(0.0), *m.t_b);
  }
  require(depth <= max_depth, ErrorCode::insufficient_graph_depth,
          "need " + std::to_string(depth) + " neighbours but only " + std::to_string(max_depth) +
              " distinct other points exist");
  NeighborGraph graph = build_neighbor_graph(dedup.dataset, depth, threads);
  while (radius_horizon && depth < max_depth && !covers(graph, *radius_horizon)) {
    depth = std::min(max_depth, 2 * depth);
    graph = build_neighbor_graph(dedup.dataset, depth, threads);
  }
  return {std::move(graph), data.size(), seconds_since(start)};
}

EstimateOptions fit_to_graph(EstimateOptions options, const NeighborGraph& graph) {
  if (is_adaptive_method(options.method) && options.config.required_depth() > graph.depth()) {
    const std::size_t k_max = graph.depth() - 1;
    require(k_max >= kMinTestedOrder, ErrorCode::insufficient_graph_depth,
            "too few points for adaptive estimation");
    spdlog::warn("k_max reduced from {} to {} to fit {} points", options.config.k_max, k_max,
                 graph.size());
    options.config.k_max = k_max;
  }
  return options;
}

RunReport estimate_on_graph(const NeighborGraph& graph, const EstimateOptions& input) {
  input.check();
  const EstimateOptions o = fit_to_graph(input, graph);
  const auto& c = o.config;
  const auto start = Clock::now();
  RunReport report;
  report.method = o.method;

  if (o.method == "twonn") {
    report.estimate = twonn_estimate(graph, c.beta_ci);
  } else if (o.method == "bide-r" || o.method == "bide-k") {
    const double tau = o.tau.value_or(default_tau(graph, c.c_star));
    const BinomialCounts counts = o.method == "bide-r" ? counts_fixed_radius(graph, *o.t_b, tau)
                                                       : counts_fixed_k(graph, *o.k, tau);
    report.estimate = o.method == "bide-r" ? bide_fixed_radius(graph, *o.t_b, tau, c.beta_ci)
                                           : bide_fixed_k(graph, *o.k, tau, c.beta_ci);
    if (c.validate) report.estimate.validation_p = validation_for(counts, report.estimate.d, c.seed);
  } else if (o.method == "gride") {
    report.estimate = gride_mle(graph, o.n1, o.n2, c.beta_ci);
  } else {
    AbideResult result = o.method == "abide"    ? abide(graph, c)
                         : o.method == "agride" ? agride(graph, c)
                                                : babide(graph, c, o.alpha0, o.beta0);
    report.estimate = std::move(result.estimate);
    report.converged = result.converged;
    report.iterations_run = result.iterations_run;
    report.k_star = summarize_kstar(result.state, c.k_max);
    report.timing.iteration_seconds = std::move(result.iteration_seconds);
  }
  report.config = config_echo(o);
  report.timing.total_seconds = seconds_since(start);
  return report;
}

RunReport run_estimate(const Dataset& data, const EstimateOptions& options) {
  options.check();
  PreparedGraph pg = prepare_graph(data, {options}, options.config.threads);
  RunReport report = estimate_on_graph(pg.graph, options);
  report.dataset = fingerprint(data, data.size() - pg.graph.size());
  report.timing.graph_seconds = pg.seconds;
  report.timing.total_seconds += pg.seconds;
  return report;
}

json run_scan(const Dataset& data, const ScanOptions& options) {
  require(options.mode == "k" || options.mode == "radius", ErrorCode::invalid_argument,
          "scan mode must be 'k' or 'radius'");
  options.config.check();
  if (options.tau)
    require(*options.tau > 0.0 && *options.tau < 1.0, ErrorCode::invalid_argument,
            "tau must lie in (0, 1)");
  const auto start = Clock::now();
  const std::size_t n_distinct = remove_duplicates(data).dataset.size();

  std::vector<EstimateOptions> needs;
  EstimateOptions reference;
  reference.method = "abide";
  reference.config = options.config;
  if (options.reference) needs.push_back(reference);

  std::vector<double> scales;
  std::optional<double> horizon;
  if (options.mode == "k") {
    std::vector<std::size_t> ks = options.k_values;
    if (ks.empty()) {
      const std::size_t top = std::min<std::size_t>(kDefaultScanDepth, n_distinct - 1);
      for (std::size_t k = 2; k <= top; ++k) ks.push_back(k);
    }
    EstimateOptions deepest;
    deepest.method = "bide-k";
    deepest.k = *std::max_element(ks.begin(), ks.end());
    needs.push_back(deepest);
    for (auto k : ks) scales.push_back(static_cast<double>(k));
  } else {
    require(options.points >= 1, ErrorCode::invalid_argument, "need at least one scan point");
    EstimateOptions probe;
    probe.method = "bide-k";
    probe.k = std::min<std::size_t>(kDefaultScanDepth, n_distinct - 1) - 1;
    needs.push_back(probe);
  }

  PreparedGraph pg = prepare_graph(data, needs, options.config.threads);
  if (options.mode == "radius") {
    const double lo = options.t_b_min.value_or(median_distance(pg.graph, 1));
    const double hi = options.t_b_max.value_or(
        median_distance(pg.graph, std::min<std::size_t>(kDefaultScanDepth, pg.graph.depth())));
    require(lo > 0.0 && hi >= lo, ErrorCode::invalid_argument, "need 0 < t_B min <= t_B max");
    for (std::size_t p = 0; p < options.points; ++p) {
      const double frac = options.points == 1 ? 0.0 : static_cast<double>(p) / (options.points - 1);
      scales.push_back(std::exp(std::log(lo) + frac * (std::log(hi) - std::log(lo))));
    }
    horizon = hi;
    if (!covers(pg.graph, hi)) pg = prepare_graph(data, needs, options.config.threads, horizon);
  }

  const NeighborGraph& graph = pg.graph;
  const double tau = options.tau.value_or(default_tau(graph, options.config.c_star));
  json entries = json::array();
  for (std::size_t s = 0; s < scales.size(); ++s) {
    json entry{{"scale", scales[s]}};
    try {
      const BinomialCounts counts =
          options.mode == "k"
              ? counts_fixed_k(graph, static_cast<std::size_t>(scales[s]), tau)
              : counts_fixed_radius(graph, scales[s], tau);
      const IdEstimate est =
          options.mode == "k"
              ? bide_fixed_k(graph, static_cast<std::size_t>(scales[s]), tau, options.config.beta_ci)
              : bide_fixed_radius(graph, scales[s], tau, options.config.beta_ci);
      entry["d"] = est.d;
      entry["ci"] = est.ci;
      entry["mean_kb"] = est.mean_kb;
      entry["validation_p"] = nullptr;
      if (options.config.validate) {
        const auto p = validation_for(counts, est.d, derive_seed(options.config.seed, s));
        if (p) entry["validation_p"] = *p;
      }
    } catch (const Error& e) {
      entry["error"] = std::string(to_string(e.code()));
      entry["message"] = e.what();
    }
    entries.push_back(std::move(entry));
  }

  json out{{"schema_version", kSchemaVersion},
           {"mode", options.mode},
           {"tau", tau},
           {"dataset", fingerprint(data, data.size() - graph.size())},
           {"config", config_echo(reference)},
           {"entries", std::move(entries)}};
  if (options.reference) {
    try {
      const EstimateOptions fitted = fit_to_graph(reference, graph);
      const AbideResult ref = abide(graph, fitted.config);
      out["reference"] = json{{"d_star", ref.estimate.d},
                              {"mean_t_b", ref.state.mean_tb()},
                              {"mean_k_star", ref.state.mean_kstar()},
                              {"mean_kb", ref.estimate.mean_kb},
                              {"validation_p", ref.estimate.validation_p
                                                   ? json(*ref.estimate.validation_p)
                                                   : json(nullptr)},
                              {"converged", ref.converged}};
    } catch (const Error& e) {
      out["reference"] = json{{"error", std::string(to_string(e.code()))}, {"message", e.what()}};
    }
  }
  out["timing"] = json{{"graph_seconds", pg.seconds}, {"total_seconds", seconds_since(start)}};
  return out;
}

std::string scan_to_csv(const json& scan) {
  std::ostringstream out;
  out.precision(17);
  out << "scale,d,lower,upper,mean_kb,validation_p,error\n";
  for (const auto& e : scan.at("entries")) {
    out << e.at("scale").get<double>() << ',';
    if (e.contains("error")) {
      out << ",,,,," << e.at("error").get<std::string>() << '\n';
      continue;
    }
    out << e.at("d").get<double>() << ',' << e.at("ci").at("lower").get<double>() << ','
        << e.at("ci").at("upper").get<double>() << ',' << e.at("mean_kb").get<double>() << ',';
    if (!e.at("validation_p").is_null()) out << e.at("validation_p").get<double>();
    out << ",\n";
  }
  return out.str();
}

double true_dimension(const GeneratorSpec& spec) {
  switch (spec.kind) {
    case GeneratorKind::sine_toy: return 1.0;
    case GeneratorKind::noisy_gaussian: return static_cast<double>(spec.d);
    case GeneratorKind::moebius: return 2.0;
    case GeneratorKind::uniform_hypercube_periodic: return static_cast<double>(spec.d);
    case GeneratorKind::density_step_1d: return 1.0;
  }
  return 0.0;
}

std::vector<MonteCarloSummary> run_benchmark(const BenchmarkOptions& options) {
  require(options.replicas >= 1, ErrorCode::invalid_argument, "need at least one replica");
  require(!options.methods.empty(), ErrorCode::invalid_argument, "need at least one method");
  options.generator.check();
  for (const auto& m : options.methods) m.check();
  const std::size_t r_count = options.replicas;
  const std::size_t m_count = options.methods.size();

  struct Slot {
    std::optional<double> d;
    double half_width = 0.0;
    double seconds = 0.0;
    std::optional<ReplicaFailure> failure;
  };
  std::vector<std::vector<Slot>> slots(m_count, std::vector<Slot>(r_count));
  std::vector<double> graph_seconds(r_count, 0.0);

  parallel_for(r_count, options.threads, [&](std::size_t r) {
    GeneratorSpec spec = options.generator;
    spec.seed = derive_seed(options.generator.seed, r);
    const Dataset data = generate(spec, options.moebius);
    std::vector<EstimateOptions> per_replica = options.methods;
    for (auto& m : per_replica) {
      m.config.seed = derive_seed(m.config.seed, r);
      m.config.threads = 1;
    }
    PreparedGraph pg = prepare_graph(data, per_replica, 1);
    graph_seconds[r] = pg.seconds;
    for (std::size_t m = 0; m < m_count; ++m) {
      Slot& slot = slots[m][r];
      try {
        const RunReport report = estimate_on_graph(pg.graph, per_replica[m]);
        slot.d = report.estimate.d;
        slot.half_width = 0.5 * (report.estimate.ci.upper - report.estimate.ci.lower);
        slot.seconds = report.timing.total_seconds;
      } catch (const Error& e) {
        slot.failure = ReplicaFailure{r, std::string(to_string(e.code())), e.what()};
      }
    }
  });

  const double d_true = options.d_true.value_or(true_dimension(options.generator));
  std::vector<MonteCarloSummary> out;
  for (std::size_t m = 0; m < m_count; ++m) {
    const EstimateOptions& method = options.methods[m];
    MonteCarloSummary s;
    s.method = method.method;
    s.replicas = r_count;
    s.generator = generator_to_json(options.generator, options.moebius);
    s.config = config_echo(method);
    s.graph_seconds = graph_seconds;
    std::vector<double> ok;
    std::vector<double> z;
    const double zq = std_normal_quantile(1.0 - 0.5 * method.config.beta_ci);
    for (const Slot& slot : slots[m]) {
      s.estimates.push_back(slot.d);
      s.estimate_seconds.push_back(slot.seconds);
      if (slot.failure) s.failures.push_back(*slot.failure);
      if (!slot.d) continue;
      ok.push_back(*slot.d);
      // sqrt(n I(d*)) recovered from the reported interval half-width.
      if (slot.half_width > 0.0) z.push_back((*slot.d - d_true) * zq / slot.half_width);
    }
    if (!ok.empty()) {
      std::vector<double> sorted = ok;
      std::sort(sorted.begin(), sorted.end());
      for (double p : s.levels) s.quantiles.push_back(empirical_quantile(sorted, p));
      double sum = 0.0;
      for (double x : sorted) sum += x;
      s.mean = sum / static_cast<double>(sorted.size());
      double ss = 0.0;
      for (double x : sorted) ss += (x - s.mean) * (x - s.mean);
      s.sd = sorted.size() > 1 ? std::sqrt(ss / static_cast<double>(sorted.size() - 1)) : 0.0;
    }
    if (options.normality && !z.empty()) {
      const KsResult ks = ks_one_sample(z, [](double x) { return std_normal_cdf(x); });
      s.normality = Normality{z, ks.statistic, ks.p_value};
    }
    out.push_back(std::move(s));
  }
  return out;
}

json moebius_to_json(const MoebiusConfig& config) {
  json blobs = json::array();
  for (const auto& b : config.blobs)
    blobs.push_back(json{{"u", b.u}, {"v", b.v}, {"sigma_u", b.sigma_u}, {"sigma_v", b.sigma_v},
                         {"weight", b.weight}});
  return json{{"background_weight", config.background_weight}, {"blobs", blobs}};
}

MoebiusConfig moebius_from_json(const json& j) {
  try {
    MoebiusConfig c;
    c.background_weight = j.at("background_weight").get<double>();
    for (const auto& b : j.at("blobs"))
      c.blobs.push_back({b.at("u").get<double>(), b.at("v").get<double>(),
                         b.at("sigma_u").get<double>(), b.at("sigma_v").get<double>(),
                         b.at("weight").get<double>()});
    c.check();
    return c;
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, std::string("bad Moebius configuration: ") + e.what());
  }
}

json generator_to_json(const GeneratorSpec& spec, const MoebiusConfig& moebius) {
  json j{{"kind", std::string(to_string(spec.kind))},
         {"n", spec.n},
         {"d", spec.d},
         {"D", spec.D},
         {"sigma_s", spec.sigma_s},
         {"sigma_eps", spec.sigma_eps},
         {"ratio", spec.ratio},
         {"seed", spec.seed}};
  if (spec.kind == GeneratorKind::moebius) j["moebius"] = moebius_to_json(moebius);
  return j;
}

void generator_from_json(const json& j, GeneratorSpec& spec, MoebiusConfig& moebius) {
  try {
    spec.kind = parse_generator_kind(j.at("kind").get<std::string>());
    j.at("n").get_to(spec.n);
    j.at("d").get_to(spec.d);
    j.at("D").get_to(spec.D);
    j.at("sigma_s").get_to(spec.sigma_s);
    j.at("sigma_eps").get_to(spec.sigma_eps);
    j.at("ratio").get_to(spec.ratio);
    j.at("seed").get_to(spec.seed);
    moebius = j.contains("moebius") ? moebius_from_json(j.at("moebius")) : MoebiusConfig::defaults();
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, std::string("bad generator description: ") + e.what());
  }
  spec.check();
}

std::filesystem::path sidecar_path(const std::filesystem::path& output) {
  return std::filesystem::path(output.string() + ".json");
}

json run_generate(const GeneratorSpec& spec, const MoebiusConfig& moebius,
                  const std::filesystem::path& output) {
  const Dataset data = generate(spec, moebius);
  write_csv(output, data);
  json sidecar{{"schema_version", kSchemaVersion},
               {"generator", generator_to_json(spec, moebius)},
               {"rows", data.size()},
               {"columns", data.dim()},
               {"metric", data.periodic() ? "periodic" : "euclidean"},
               {"content_hash", content_hash(data)},
               {"file_hash", file_hash(output)}};
  std::ofstream out(sidecar_path(output));
  require(out.good(), ErrorCode::invalid_argument,
          "cannot write '" + sidecar_path(output).string() + "'");
  out << sidecar.dump(2) << '\n';
  return sidecar;
}

json run_fetch_optdigits(const std::filesystem::path& output, const std::string& url) {
  const std::filesystem::path raw = output.string() + ".download";
  auto quote = [](const std::string& s) {
    std::string q = "'";
    for (char ch : s) q += ch == '\'' ? std::string("'\\''") : std::string(1, ch);
    return q + "'";
  };
  const std::string command = "curl -fsSL --retry 2 -o " + quote(raw.string()) + " " + quote(url);
  const int status = std::system(command.c_str());
  require(status == 0, ErrorCode::invalid_argument, "download failed: " + command);
  const Dataset data = load_dataset(raw, std::nullopt, 1);
  std::filesystem::remove(raw);
  write_csv(output, data);
  return json{{"rows", data.size()}, {"columns", data.dim()}, {"content_hash", content_hash(data)},
              {"output", output.string()}, {"url", url}};
}

json error_json(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    json j{{"error", std::string(to_string(err->code()))}, {"message", err->what()}};
    if (const auto* adaptive = dynamic_cast<const AdaptiveError*>(&e)) j["trace"] = adaptive->trace();
    return j;
  }
  return json{{"error", "internal-error"}, {"message", e.what()}};
}

int exit_code_for(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return exit_code(err->code());
  return 1;
}

}  // namespace idscale::cli
