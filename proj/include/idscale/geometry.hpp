#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace idscale {

struct Euclidean {
  bool operator==(const Euclidean&) const = default;
};

// Minimal-image distance per coordinate, aggregated in the Euclidean way.
// One period per coordinate; every period must be strictly positive.
struct Periodic {
  std::vector<double> periods;
  bool operator==(const Periodic&) const = default;
};

using Metric = std::variant<Euclidean, Periodic>;

// Point cloud stored row-major (one point per row). Periodic coordinates are
// wrapped into [0, period) on construction.
class Dataset {
 public:
  Dataset(std::size_t n, std::size_t dim, std::vector<double> coords,
          Metric metric = Euclidean{});

  std::size_t size() const noexcept { return n_; }
  std::size_t dim() const noexcept { return dim_; }
  const Metric& metric() const noexcept { return metric_; }
  bool periodic() const noexcept { return std::holds_alternative<Periodic>(metric_); }

  std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  std::span<const double> coords() const noexcept { return coords_; }

  double distance(std::size_t i, std::size_t j) const;

 private:
  std::size_t n_;
  std::size_t dim_;
  std::vector<double> coords_;
  Metric metric_;
};

double squared_distance(const Metric& metric, std::span<const double> a,
                        std::span<const double> b);
double distance(const Metric& metric, std::span<const double> a,
                std::span<const double> b);

struct Deduplicated {
  Dataset dataset;
  // Original index of each retained point (first occurrence wins).
  std::vector<std::size_t> kept;
  std::size_t removed = 0;
};

// Drops exact duplicate points. Throws degenerate-dataset when fewer than two
// distinct points remain.
Deduplicated remove_duplicates(const Dataset& dataset);

// Exact K nearest neighbours of every point, self excluded. Orders are
// 1-based: distance(i, 1) is the nearest neighbour, distance(i, 0) == 0.
// Immutable after construction.
class NeighborGraph {
 public:
  NeighborGraph(std::size_t n, std::size_t depth, std::vector<double> dist,
                std::vector<std::uint32_t> index, std::vector<std::size_t> source,
                std::size_t duplicates_removed);

  std::size_t size() const noexcept { return n_; }
  std::size_t depth() const noexcept { return depth_; }

  double distance(std::size_t i, std::size_t order) const {
    return order == 0 ? 0.0 : dist_[i * depth_ + order - 1];
  }
  double log_distance(std::size_t i, std::size_t order) const {
    return log_dist_[i * depth_ + order - 1];
  }
  std::size_t neighbor(std::size_t i, std::size_t order) const {
    return index_[i * depth_ + order - 1];
  }
  std::span<const double> distances(std::size_t i) const {
    return {dist_.data() + i * depth_, depth_};
  }
  std::span<const std::uint32_t> neighbors(std::size_t i) const {
    return {index_.data() + i * depth_, depth_};
  }

  // Index of graph point i in the dataset passed to build_neighbor_graph.
  std::size_t source_index(std::size_t i) const { return source_[i]; }
  std::size_t duplicates_removed() const noexcept { return duplicates_removed_; }

 private:
  std::size_t n_;
  std::size_t depth_;
  std::vector<double> dist_;
  std::vector<double> log_dist_;
  std::vector<std::uint32_t> index_;
  std::vector<std::size_t> source_;
  std::size_t duplicates_removed_;
};

// Removes duplicates (logging the count), then runs an exact search. Ties
// are broken by the smaller point index, so the result is independent of
// the thread count.
NeighborGraph build_neighbor_graph(const Dataset& dataset, std::size_t depth,
                                   unsigned threads = 1);

// log(Omega_d) + d * log_r, Omega_d the volume of the unit d-ball.
double log_ball_volume(double d, double log_r);

// Stored neighbours of i strictly closer than radius. Radii beyond the stored
// horizon r_{i,K} would undercount and are rejected, unless the graph is
// complete (K = n - 1).
std::size_t count_within_open_ball(const NeighborGraph& graph, std::size_t i,
                                   double radius);

}  // namespace idscale
