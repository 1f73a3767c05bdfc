#include "idscale/geometry.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numeric>
#include <queue>
#include <string>
#include <utility>

#include <spdlog/spdlog.h>

#include "idscale/error.hpp"
#include "idscale/parallel.hpp"
#include "idscale/specfun.hpp"

namespace idscale {

Dataset::Dataset(std::size_t n, std::size_t dim, std::vector<double> coords, Metric metric)
    : n_(n), dim_(dim), coords_(std::move(coords)), metric_(std::move(metric)) {
  require(n >= 2, ErrorCode::invalid_argument, "dataset needs at least 2 points");
  require(dim >= 1, ErrorCode::invalid_argument, "dataset needs at least 1 coordinate");
  require(coords_.size() == n * dim, ErrorCode::invalid_argument,
          "coordinate buffer size does not match n x D");
  for (double x : coords_)
    require(std::isfinite(x), ErrorCode::invalid_argument, "non-finite coordinate");
  if (auto* p = std::get_if<Periodic>(&metric_)) {
    require(p->periods.size() == dim, ErrorCode::invalid_argument,
            "periodic metric needs one period per coordinate");
    for (double period : p->periods)
      require(std::isfinite(period) && period > 0.0, ErrorCode::invalid_argument,
              "periods must be strictly positive");
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < dim; ++c) {
        double& x = coords_[i * dim + c];
        const double period = p->periods[c];
        x = std::fmod(x, period);
        if (x < 0.0) x += period;
        if (x >= period) x = 0.0;  // fmod rounding at the upper edge
      }
    }
  }
}

double Dataset::distance(std::size_t i, std::size_t j) const {
  return idscale::distance(metric_, point(i), point(j));
}

double squared_distance(const Metric& metric, std::span<const double> a,
                        std::span<const double> b) {
  double sum = 0.0;
  if (const auto* p = std::get_if<Periodic>(&metric)) {
    for (std::size_t c = 0; c < a.size(); ++c) {
      double delta = std::abs(a[c] - b[c]);
      delta = std::min(delta, p->periods[c] - delta);
      sum += delta * delta;
    }
  } else {
    for (std::size_t c = 0; c < a.size(); ++c) {
      const double delta = a[c] - b[c];
      sum += delta * delta;
    }
  }
  return sum;
}

double distance(const Metric& metric, std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(metric, a, b));
}

Deduplicated remove_duplicates(const Dataset& dataset) {
  const std::size_t n = dataset.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto less = [&](std::size_t a, std::size_t b) {
    auto pa = dataset.point(a);
    auto pb = dataset.point(b);
    if (std::lexicographical_compare(pa.begin(), pa.end(), pb.begin(), pb.end())) return true;
    if (std::lexicographical_compare(pb.begin(), pb.end(), pa.begin(), pa.end())) return false;
    return a < b;
  };
  std::sort(order.begin(), order.end(), less);

  std::vector<bool> keep(n, true);
  for (std::size_t r = 1; r < n; ++r) {
    auto prev = dataset.point(order[r - 1]);
    auto cur = dataset.point(order[r]);
    if (std::equal(prev.begin(), prev.end(), cur.begin())) keep[order[r]] = false;
  }

  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < n; ++i)
    if (keep[i]) kept.push_back(i);
  const std::size_t removed = n - kept.size();
  require(kept.size() >= 2, ErrorCode::degenerate_dataset,
          "fewer than two distinct points after duplicate removal");

  std::vector<double> coords;
  coords.reserve(kept.size() * dataset.dim());
  for (std::size_t i : kept) {
    auto p = dataset.point(i);
    coords.insert(coords.end(), p.begin(), p.end());
  }
  return {Dataset(kept.size(), dataset.dim(), std::move(coords), dataset.metric()),
          std::move(kept), removed};
}

NeighborGraph::NeighborGraph(std::size_t n, std::size_t depth, std::vector<double> dist,
                             std::vector<std::uint32_t> index, std::vector<std::size_t> source,
                             std::size_t duplicates_removed)
    : n_(n),
      depth_(depth),
      dist_(std::move(dist)),
      index_(std::move(index)),
      source_(std::move(source)),
      duplicates_removed_(duplicates_removed) {
  log_dist_.resize(dist_.size());
  std::transform(dist_.begin(), dist_.end(), log_dist_.begin(),
                 [](double r) { return std::log(r); });
}

namespace {

// Squared distance with early exit once the running sum reaches `bound`.
// Partial sums of nonnegative terms never decrease under rounding, so an
// early exit never discards a point the full sum would have kept.
template <bool Periodic>
double bounded_squared_distance(const double* a, const double* b, const double* periods,
                                std::size_t dim, double bound) {
  constexpr std::size_t kBlock = 8;
  double sum = 0.0;
  std::size_t c = 0;
  while (c < dim) {
    const std::size_t end = std::min(dim, c + kBlock);
    for (; c < end; ++c) {
      double delta = a[c] - b[c];
      if constexpr (Periodic) {
        delta = std::abs(delta);
        delta = std::min(delta, periods[c] - delta);
      }
      sum += delta * delta;
    }
    if (sum >= bound) return sum;
  }
  return sum;
}

template <bool Periodic>
void knn_for_point(const Dataset& data, const double* periods, std::size_t i, std::size_t depth,
                   double* out_dist, std::uint32_t* out_index) {
  using Entry = std::pair<double, std::uint32_t>;
  // Max-heap on (squared distance, index): top is the current worst kept.
  std::priority_queue<Entry> heap;
  const std::size_t n = data.size();
  const std::size_t dim = data.dim();
  const double* base = data.coords().data();
  const double* xi = base + i * dim;
  const double inf = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    // Candidates arrive in increasing index, so on equal distance the kept
    // (smaller index) entry wins and the candidate can be rejected.
    const double bound = heap.size() == depth ? heap.top().first : inf;
    const double d2 = bounded_squared_distance<Periodic>(xi, base + j * dim, periods, dim, bound);
    if (heap.size() < depth) {
      heap.emplace(d2, static_cast<std::uint32_t>(j));
    } else if (d2 < bound) {
      heap.pop();
      heap.emplace(d2, static_cast<std::uint32_t>(j));
    }
  }
  for (std::size_t r = depth; r-- > 0;) {
    out_dist[r] = std::sqrt(heap.top().first);
    out_index[r] = heap.top().second;
    heap.pop();
  }
}

}  // namespace

NeighborGraph build_neighbor_graph(const Dataset& dataset, std::size_t depth, unsigned threads) {
  Deduplicated dedup = remove_duplicates(dataset);
  if (dedup.removed > 0)
    spdlog::warn("removed {} duplicate point(s) before neighbour search", dedup.removed);
  const Dataset& data = dedup.dataset;
  const std::size_t n = data.size();
  require(depth >= 1, ErrorCode::invalid_argument, "neighbour depth must be positive");
  require(depth <= n - 1, ErrorCode::invalid_argument,
          "neighbour depth " + std::to_string(depth) + " exceeds n-1 = " + std::to_string(n - 1));
  require(n <= std::numeric_limits<std::uint32_t>::max(), ErrorCode::invalid_argument,
          "too many points");

  std::vector<double> dist(n * depth);
  std::vector<std::uint32_t> index(n * depth);
  const double* periods = nullptr;
  if (const auto* p = std::get_if<Periodic>(&data.metric())) periods = p->periods.data();

  parallel_for(n, threads, [&](std::size_t i) {
    if (periods)
      knn_for_point<true>(data, periods, i, depth, dist.data() + i * depth, index.data() + i * depth);
    else
      knn_for_point<false>(data, nullptr, i, depth, dist.data() + i * depth, index.data() + i * depth);
  });

  return NeighborGraph(n, depth, std::move(dist), std::move(index), std::move(dedup.kept),
                       dedup.removed);
}

double log_ball_volume(double d, double log_r) {
  require(d > 0.0 && std::isfinite(d), ErrorCode::invalid_argument, "dimension must be positive");
  require(std::isfinite(log_r), ErrorCode::invalid_argument, "log radius must be finite");
  constexpr double kLogPi = 1.1447298858494002;
  return 0.5 * d * kLogPi - log_gamma(0.5 * d + 1.0) + d * log_r;
}

std::size_t count_within_open_ball(const NeighborGraph& graph, std::size_t i, double radius) {
  require(i < graph.size(), ErrorCode::invalid_argument, "point index out of range");
  auto r = graph.distances(i);
  require(radius <= r.back() || graph.depth() + 1 == graph.size(), ErrorCode::insufficient_graph_depth,
          "radius exceeds the stored neighbour horizon of point " + std::to_string(i));
  return static_cast<std::size_t>(std::lower_bound(r.begin(), r.end(), radius) - r.begin());
}

}  // namespace idscale
