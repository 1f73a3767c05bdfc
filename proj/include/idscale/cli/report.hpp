#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "idscale/adaptive.hpp"
#include "idscale/estimators.hpp"
#include "idscale/geometry.hpp"

namespace idscale {

// Found by argument-dependent lookup, so they live next to the types.
void to_json(nlohmann::json& j, const ConfidenceInterval& v);
void from_json(const nlohmann::json& j, ConfidenceInterval& v);
void to_json(nlohmann::json& j, const TraceEntry& v);
void from_json(const nlohmann::json& j, TraceEntry& v);
void to_json(nlohmann::json& j, const IdEstimate& v);
void from_json(const nlohmann::json& j, IdEstimate& v);

}  // namespace idscale

namespace idscale::cli {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

struct DatasetFingerprint {
  std::size_t n = 0;  // before duplicate removal
  std::size_t dim = 0;
  std::string metric = "euclidean";
  std::vector<double> periods;
  std::string content_hash;
  std::size_t duplicates_removed = 0;
  bool operator==(const DatasetFingerprint&) const = default;
};

DatasetFingerprint fingerprint(const Dataset& data, std::size_t duplicates_removed = 0);

struct Histogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;
  bool operator==(const Histogram&) const = default;
};

struct KStarSummary {
  double mean = 0.0;
  std::vector<double> levels;     // quantile levels
  std::vector<double> quantiles;  // k* at those levels
  Histogram histogram;
  double saturation_fraction = 0.0;
  double mean_t_b = 0.0;
  double mean_t_a = 0.0;
  bool operator==(const KStarSummary&) const = default;
};

KStarSummary summarize_kstar(const AdaptiveState& state, std::size_t k_max);

struct PhaseTiming {
  double graph_seconds = 0.0;
  std::vector<double> iteration_seconds;
  double total_seconds = 0.0;
  bool operator==(const PhaseTiming&) const = default;
};

struct RunReport {
  int schema_version = kSchemaVersion;
  std::string method;
  IdEstimate estimate;
  std::optional<bool> converged;
  std::optional<std::size_t> iterations_run;
  json config = json::object();
  DatasetFingerprint dataset;
  std::optional<KStarSummary> k_star;
  PhaseTiming timing;
  bool operator==(const RunReport&) const = default;
};

struct Normality {
  std::vector<double> z;
  double ks_statistic = 0.0;
  double ks_p_value = 1.0;
  bool operator==(const Normality&) const = default;
};

struct ReplicaFailure {
  std::size_t replica = 0;
  std::string error;
  std::string message;
  bool operator==(const ReplicaFailure&) const = default;
};

struct MonteCarloSummary {
  int schema_version = kSchemaVersion;
  std::string method;
  std::size_t replicas = 0;
  json generator = json::object();
  json config = json::object();
  std::vector<std::optional<double>> estimates;  // empty slot for a failed replica
  std::vector<double> levels{0.005, 0.5, 0.995};
  std::vector<double> quantiles;
  double mean = 0.0;
  double sd = 0.0;
  std::optional<Normality> normality;
  std::vector<ReplicaFailure> failures;
  std::vector<double> graph_seconds;
  std::vector<double> estimate_seconds;
  bool operator==(const MonteCarloSummary&) const = default;
};

void to_json(json& j, const DatasetFingerprint& v);
void from_json(const json& j, DatasetFingerprint& v);
void to_json(json& j, const Histogram& v);
void from_json(const json& j, Histogram& v);
void to_json(json& j, const KStarSummary& v);
void from_json(const json& j, KStarSummary& v);
void to_json(json& j, const PhaseTiming& v);
void from_json(const json& j, PhaseTiming& v);
void to_json(json& j, const RunReport& v);
void from_json(const json& j, RunReport& v);
void to_json(json& j, const Normality& v);
void from_json(const json& j, Normality& v);
void to_json(json& j, const ReplicaFailure& v);
void from_json(const json& j, ReplicaFailure& v);
void to_json(json& j, const MonteCarloSummary& v);
void from_json(const json& j, MonteCarloSummary& v);

// Serializes with full double precision; non-finite numbers become null.
std::string dump(const json& j, int indent = 2);

}  // namespace idscale::cli
