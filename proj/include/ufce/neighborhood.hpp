#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ufce/data.hpp"

namespace ufce {

/// Maps raw instances into the space used for neighbor search: numeric
/// features min-max scaled, categorical features as a 0/1 indicator of the
/// second code. Distance is Euclidean over numeric slots plus one per
/// categorical mismatch.
class Embedding {
 public:
  Embedding() = default;
  Embedding(const Schema& schema, Scaler scaler);

  [[nodiscard]] std::vector<double> embed(const Instance& raw) const;
  [[nodiscard]] double distance(std::span<const double> a, std::span<const double> b) const;
  [[nodiscard]] double raw_distance(const Instance& a, const Instance& b) const {
    return distance(embed(a), embed(b));
  }
  [[nodiscard]] std::size_t dimension() const noexcept { return categorical_.size(); }
  [[nodiscard]] bool is_categorical(std::size_t i) const { return categorical_[i]; }
  [[nodiscard]] const Scaler& scaler() const noexcept { return scaler_; }

 private:
  Scaler scaler_;
  std::vector<bool> categorical_;
  std::vector<double> second_code_;
};

struct Neighbor {
  std::size_t index = 0;  // row index into the points the tree was built from
  double distance = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Static kd-tree with median splits. Results are ordered by (distance, index).
class NeighborTree {
 public:
  NeighborTree() = default;
  /// `points` are already embedded. Throws ArgumentError when empty.
  NeighborTree(std::vector<std::vector<double>> points, Embedding metric);

  [[nodiscard]] std::vector<Neighbor> radius_query(std::span<const double> q, double radius) const;
  /// The k nearest points; `exclude` skips one row index (used for self-queries).
  [[nodiscard]] std::vector<Neighbor> knn(std::span<const double> q, std::size_t k,
                                          std::optional<std::size_t> exclude = std::nullopt) const;
  [[nodiscard]] double farthest_distance(std::span<const double> q) const;

  [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
  [[nodiscard]] std::size_t depth() const noexcept { return depth_; }
  [[nodiscard]] const std::vector<double>& point(std::size_t i) const { return points_[i]; }
  [[nodiscard]] const Embedding& metric() const noexcept { return metric_; }
  /// Every stored index exactly once (tree traversal order).
  [[nodiscard]] std::vector<std::size_t> indices() const;

 private:
  struct Node {
    std::size_t begin = 0, end = 0;  // range in order_
    std::size_t axis = 0;
    double split = 0.0;
    int left = -1, right = -1;
  };
  static constexpr std::size_t kLeafSize = 8;

  int build(std::size_t begin, std::size_t end, std::size_t level);
  void radius_search(int node, std::span<const double> q, double radius, std::vector<Neighbor>& out) const;
  void knn_search(int node, std::span<const double> q, std::size_t k, std::optional<std::size_t> exclude,
                  std::vector<Neighbor>& heap) const;

  std::vector<std::vector<double>> points_;
  Embedding metric_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  std::size_t depth_ = 0;
};

struct RadiusPolicy {
  double fraction = 0.25;         // of the distance to the farthest desired-space point
  std::size_t min_neighbors = 5;
  std::size_t max_doublings = 3;
};

struct NeighborhoodResult {
  std::vector<Neighbor> neighbors;
  double radius = 0.0;
  std::size_t doublings = 0;
};

/// All tree points within `radius` of raw instance `x`, nearest first.
std::vector<Neighbor> fnn(const NeighborTree& tree, const Instance& x, double radius);
/// Radius chosen by `policy`, doubled while fewer than min_neighbors are found.
NeighborhoodResult fnn(const NeighborTree& tree, const Instance& x, const RadiusPolicy& policy);

/// A [lower, upper] pair for one feature. Categorical entries hold
/// [current code, alternate code].
struct Bound {
  std::size_t feature = 0;
  double lower = 0.0;
  double upper = 0.0;

  friend bool operator==(const Bound&, const Bound&) = default;
};

/// Ordered per-feature bounds; order is the user's change-list order.
struct FeatureBounds {
  std::vector<Bound> entries;

  [[nodiscard]] const Bound* find(std::size_t feature) const;
  [[nodiscard]] bool contains(std::size_t feature) const { return find(feature) != nullptr; }
  [[nodiscard]] std::vector<std::size_t> features() const;
  [[nodiscard]] std::size_t size() const noexcept { return entries.size(); }
  [[nodiscard]] bool empty() const noexcept { return entries.empty(); }
  void set(std::size_t feature, double lower, double upper);

  friend bool operator==(const FeatureBounds&, const FeatureBounds&) = default;
};

/// The user's feedback p.
struct PerturbationMap : FeatureBounds {
  /// Throws ArgumentError when a numeric entry has lower > upper or a
  /// categorical entry holds a code outside the schema.
  void validate(const Schema& schema) const;
};

/// Feedback intersected with the neighborhood's feature ranges.
struct Subspace : FeatureBounds {
  std::vector<std::string> warnings;
};

/// Builds the subspace from the raw neighbor rows `nn`. Strict mode clamps
/// both ends to the neighborhood hull; otherwise the if/elif rule is
/// applied as written. Features whose interval comes out empty are dropped
/// with a warning.
Subspace intervals(std::span<const Instance> nn, const PerturbationMap& p, const Schema& schema, bool strict = true);

}  // namespace ufce
