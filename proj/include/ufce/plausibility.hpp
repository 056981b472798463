#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "ufce/data.hpp"
#include "ufce/neighborhood.hpp"

namespace ufce {

struct LofConfig {
  std::size_t k = 20;
  double threshold = 1.5;
};

inline constexpr double kLofDistanceFloor = 1e-12;

/// Local Outlier Factor against a fixed reference population.
class LofModel {
 public:
  LofModel() = default;

  /// LOF of a new point with respect to the reference rows.
  [[nodiscard]] double score(const Instance& raw) const;
  [[nodiscard]] double score_embedded(std::span<const double> q) const;
  [[nodiscard]] bool is_plausible(const Instance& raw) const { return score(raw) <= config_.threshold; }
  [[nodiscard]] bool is_plausible(const Instance& raw, double threshold) const { return score(raw) <= threshold; }

  /// LOF of every reference row against the others.
  [[nodiscard]] std::vector<double> reference_scores() const;

  [[nodiscard]] const std::vector<double>& lrd() const noexcept { return lrd_; }
  [[nodiscard]] const std::vector<double>& k_distance() const noexcept { return k_distance_; }
  [[nodiscard]] std::size_t k() const noexcept { return config_.k; }
  [[nodiscard]] double threshold() const noexcept { return config_.threshold; }
  /// Throws ArgumentError unless threshold > 0.
  void set_threshold(double threshold);
  [[nodiscard]] const NeighborTree& tree() const noexcept { return tree_; }

 private:
  friend LofModel fit_lof(std::vector<std::vector<double>> points, const Embedding& metric, const LofConfig& config);

  [[nodiscard]] double local_density(const std::vector<Neighbor>& neighbors) const;

  NeighborTree tree_;
  LofConfig config_;
  std::vector<double> k_distance_;
  std::vector<double> lrd_;
  std::vector<std::vector<Neighbor>> neighbors_;
};

/// Throws ArgumentError unless there are more than k rows and threshold > 0.
LofModel fit_lof(std::vector<std::vector<double>> points, const Embedding& metric, const LofConfig& config = {});
LofModel fit_lof(const Dataset& reference, const Embedding& metric, const LofConfig& config = {});

}  // namespace ufce
