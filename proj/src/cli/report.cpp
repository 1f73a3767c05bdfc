#include "idscale/cli/report.hpp"

#include <algorithm>
#include <cmath>

#include "idscale/cli/io.hpp"
#include "idscale/error.hpp"
#include "idscale/specfun.hpp"

namespace idscale {

using nlohmann::json;

namespace {

template <class T>
void put_opt(json& j, const char* key, const std::optional<T>& value) {
  j[key] = value ? json(*value) : json(nullptr);
}

template <class T>
std::optional<T> get_opt(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace

void to_json(json& j, const ConfidenceInterval& v) { j = json{{"lower", v.lower}, {"upper", v.upper}}; }
void from_json(const json& j, ConfidenceInterval& v) {
  j.at("lower").get_to(v.lower);
  j.at("upper").get_to(v.upper);
}

void to_json(json& j, const TraceEntry& v) {
  j = json{{"iteration", v.iteration}, {"d", v.d}, {"tau", v.tau}};
  put_opt(j, "mean_kstar", v.mean_kstar);
  put_opt(j, "validation_p", v.validation_p);
}
void from_json(const json& j, TraceEntry& v) {
  j.at("iteration").get_to(v.iteration);
  j.at("d").get_to(v.d);
  j.at("tau").get_to(v.tau);
  v.mean_kstar = get_opt<double>(j, "mean_kstar");
  v.validation_p = get_opt<double>(j, "validation_p");
}

void to_json(json& j, const IdEstimate& v) {
  j = json{{"d", v.d}, {"tau", v.tau}, {"ci", v.ci}, {"mean_kb", v.mean_kb}, {"trace", v.trace}};
  put_opt(j, "validation_p", v.validation_p);
}
void from_json(const json& j, IdEstimate& v) {
  j.at("d").get_to(v.d);
  j.at("tau").get_to(v.tau);
  j.at("ci").get_to(v.ci);
  j.at("mean_kb").get_to(v.mean_kb);
  j.at("trace").get_to(v.trace);
  v.validation_p = get_opt<double>(j, "validation_p");
}

}  // namespace idscale

namespace idscale::cli {

namespace {

template <class T>
void put_optional(json& j, const char* key, const std::optional<T>& value) {
  j[key] = value ? json(*value) : json(nullptr);
}

template <class T>
std::optional<T> get_optional(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace

DatasetFingerprint fingerprint(const Dataset& data, std::size_t duplicates_removed) {
  DatasetFingerprint f;
  f.n = data.size();
  f.dim = data.dim();
  if (const auto* p = std::get_if<Periodic>(&data.metric())) {
    f.metric = "periodic";
    f.periods = p->periods;
  }
  f.content_hash = content_hash(data);
  f.duplicates_removed = duplicates_removed;
  return f;
}

KStarSummary summarize_kstar(const AdaptiveState& state, std::size_t k_max) {
  KStarSummary s;
  s.mean = state.mean_kstar();
  s.mean_t_b = state.mean_tb();
  s.mean_t_a = state.mean_ta();
  s.saturation_fraction = state.saturation_fraction(k_max);
  std::vector<double> sorted(state.k_star.begin(), state.k_star.end());
  std::sort(sorted.begin(), sorted.end());
  s.levels = {0.05, 0.25, 0.5, 0.75, 0.95};
  for (double p : s.levels) s.quantiles.push_back(empirical_quantile(sorted, p));

  // Integer-aligned bins over [2, k_max + 1), at most 20 of them.
  const std::size_t lo = kMinTestedOrder;
  const std::size_t span = k_max + 1 - lo;
  const std::size_t width = std::max<std::size_t>(1, (span + 19) / 20);
  for (std::size_t e = lo; e < k_max + 1; e += width) s.histogram.edges.push_back(static_cast<double>(e));
  s.histogram.edges.push_back(static_cast<double>(k_max + 1));
  s.histogram.counts.assign(s.histogram.edges.size() - 1, 0);
  for (std::size_t k : state.k_star)
    ++s.histogram.counts[std::min((k - lo) / width, s.histogram.counts.size() - 1)];
  return s;
}

void to_json(json& j, const DatasetFingerprint& v) {
  j = json{{"n", v.n},
           {"dim", v.dim},
           {"metric", v.metric},
           {"periods", v.periods},
           {"content_hash", v.content_hash},
           {"duplicates_removed", v.duplicates_removed}};
}
void from_json(const json& j, DatasetFingerprint& v) {
  j.at("n").get_to(v.n);
  j.at("dim").get_to(v.dim);
  j.at("metric").get_to(v.metric);
  j.at("periods").get_to(v.periods);
  j.at("content_hash").get_to(v.content_hash);
  j.at("duplicates_removed").get_to(v.duplicates_removed);
}

void to_json(json& j, const Histogram& v) { j = json{{"edges", v.edges}, {"counts", v.counts}}; }
void from_json(const json& j, Histogram& v) {
  j.at("edges").get_to(v.edges);
  j.at("counts").get_to(v.counts);
}

void to_json(json& j, const KStarSummary& v) {
  j = json{{"mean", v.mean},
           {"levels", v.levels},
           {"quantiles", v.quantiles},
           {"histogram", v.histogram},
           {"saturation_fraction", v.saturation_fraction},
           {"mean_t_b", v.mean_t_b},
           {"mean_t_a", v.mean_t_a}};
}
void from_json(const json& j, KStarSummary& v) {
  j.at("mean").get_to(v.mean);
  j.at("levels").get_to(v.levels);
  j.at("quantiles").get_to(v.quantiles);
  j.at("histogram").get_to(v.histogram);
  j.at("saturation_fraction").get_to(v.saturation_fraction);
  j.at("mean_t_b").get_to(v.mean_t_b);
  j.at("mean_t_a").get_to(v.mean_t_a);
}

void to_json(json& j, const PhaseTiming& v) {
  j = json{{"graph_seconds", v.graph_seconds},
           {"iteration_seconds", v.iteration_seconds},
           {"total_seconds", v.total_seconds}};
}
void from_json(const json& j, PhaseTiming& v) {
  j.at("graph_seconds").get_to(v.graph_seconds);
  j.at("iteration_seconds").get_to(v.iteration_seconds);
  j.at("total_seconds").get_to(v.total_seconds);
}

void to_json(json& j, const RunReport& v) {
  j = json{{"schema_version", v.schema_version},
           {"method", v.method},
           {"estimate", v.estimate},
           {"config", v.config},
           {"dataset", v.dataset},
           {"timing", v.timing}};
  put_optional(j, "converged", v.converged);
  put_optional(j, "iterations_run", v.iterations_run);
  put_optional(j, "k_star", v.k_star);
}
void from_json(const json& j, RunReport& v) {
  j.at("schema_version").get_to(v.schema_version);
  require(v.schema_version == kSchemaVersion, ErrorCode::parse_error,
          "unsupported report schema version " + std::to_string(v.schema_version));
  j.at("method").get_to(v.method);
  j.at("estimate").get_to(v.estimate);
  v.config = j.at("config");
  j.at("dataset").get_to(v.dataset);
  j.at("timing").get_to(v.timing);
  v.converged = get_optional<bool>(j, "converged");
  v.iterations_run = get_optional<std::size_t>(j, "iterations_run");
  v.k_star = get_optional<KStarSummary>(j, "k_star");
}

void to_json(json& j, const Normality& v) {
  j = json{{"z", v.z}, {"ks_statistic", v.ks_statistic}, {"ks_p_value", v.ks_p_value}};
}
void from_json(const json& j, Normality& v) {
  j.at("z").get_to(v.z);
  j.at("ks_statistic").get_to(v.ks_statistic);
  j.at("ks_p_value").get_to(v.ks_p_value);
}

void to_json(json& j, const ReplicaFailure& v) {
  j = json{{"replica", v.replica}, {"error", v.error}, {"message", v.message}};
}
void from_json(const json& j, ReplicaFailure& v) {
  j.at("replica").get_to(v.replica);
  j.at("error").get_to(v.error);
  j.at("message").get_to(v.message);
}

void to_json(json& j, const MonteCarloSummary& v) {
  json estimates = json::array();
  for (const auto& e : v.estimates) estimates.push_back(e ? json(*e) : json(nullptr));
  j = json{{"schema_version", v.schema_version},
           {"method", v.method},
           {"replicas", v.replicas},
           {"generator", v.generator},
           {"config", v.config},
           {"estimates", estimates},
           {"levels", v.levels},
           {"quantiles", v.quantiles},
           {"mean", v.mean},
           {"sd", v.sd},
           {"failures", v.failures},
           {"graph_seconds", v.graph_seconds},
           {"estimate_seconds", v.estimate_seconds}};
  put_optional(j, "normality", v.normality);
}
void from_json(const json& j, MonteCarloSummary& v) {
  j.at("schema_version").get_to(v.schema_version);
  require(v.schema_version == kSchemaVersion, ErrorCode::parse_error,
          "unsupported summary schema version " + std::to_string(v.schema_version));
  j.at("method").get_to(v.method);
  j.at("replicas").get_to(v.replicas);
  v.generator = j.at("generator");
  v.config = j.at("config");
  v.estimates.clear();
  for (const auto& e : j.at("estimates"))
    v.estimates.push_back(e.is_null() ? std::nullopt : std::optional<double>(e.get<double>()));
  j.at("levels").get_to(v.levels);
  j.at("quantiles").get_to(v.quantiles);
  j.at("mean").get_to(v.mean);
  j.at("sd").get_to(v.sd);
  j.at("failures").get_to(v.failures);
  j.at("graph_seconds").get_to(v.graph_seconds);
  j.at("estimate_seconds").get_to(v.estimate_seconds);
  v.normality = get_optional<Normality>(j, "normality");
}

std::string dump(const json& j, int indent) { return j.dump(indent); }

}  // namespace idscale::cli
