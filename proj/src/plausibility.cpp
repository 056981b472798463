#include "ufce/plausibility.hpp"

#include <algorithm>

#include "ufce/errors.hpp"

namespace ufce {

double LofModel::local_density(const std::vector<Neighbor>& neighbors) const {
  double reach = 0.0;
  for (const auto& n : neighbors) reach += std::max(k_distance_[n.index], n.distance);
  reach /= static_cast<double>(neighbors.size());
  return 1.0 / std::max(reach, kLofDistanceFloor);
}

double LofModel::score_embedded(std::span<const double> q) const {
  const auto neighbors = tree_.knn(q, config_.k);
  const double own = local_density(neighbors);
  double ratio = 0.0;
  for (const auto& n : neighbors) ratio += lrd_[n.index] / own;
  return ratio / static_cast<double>(neighbors.size());
}

double LofModel::score(const Instance& raw) const { return score_embedded(tree_.metric().embed(raw)); }

std::vector<double> LofModel::reference_scores() const {
  std::vector<double> out(lrd_.size());
  for (std::size_t r = 0; r < lrd_.size(); ++r) {
    double ratio = 0.0;
    for (const auto& n : neighbors_[r]) ratio += lrd_[n.index] / lrd_[r];
    out[r] = ratio / static_cast<double>(neighbors_[r].size());
  }
  return out;
}

void LofModel::set_threshold(double threshold) {
  if (!(threshold > 0.0)) throw ArgumentError("LOF threshold must be positive");
  config_.threshold = threshold;
}

LofModel fit_lof(std::vector<std::vector<double>> points, const Embedding& metric, const LofConfig& config) {
  if (config.k < 1) throw ArgumentError("LOF needs k >= 1");
  if (points.size() <= config.k) {
    throw ArgumentError("LOF with k=" + std::to_string(config.k) + " needs more than " + std::to_string(config.k) +
                        " reference rows, got " + std::to_string(points.size()));
  }
  if (!(config.threshold > 0.0)) throw ArgumentError("LOF threshold must be positive");
  LofModel m;
  m.config_ = config;
  m.tree_ = NeighborTree(std::move(points), metric);
  const std::size_t n = m.tree_.size();
  m.neighbors_.resize(n);
  m.k_distance_.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    m.neighbors_[r] = m.tree_.knn(m.tree_.point(r), config.k, r);
    m.k_distance_[r] = m.neighbors_[r].back().distance;
  }
  m.lrd_.resize(n);
  for (std::size_t r = 0; r < n; ++r) m.lrd_[r] = m.local_density(m.neighbors_[r]);
  return m;
}

LofModel fit_lof(const Dataset& reference, const Embedding& metric, const LofConfig& config) {
  std::vector<std::vector<double>> points;
  points.reserve(reference.size());
  for (const auto& r : reference.rows) points.push_back(metric.embed(r));
  return fit_lof(std::move(points), metric, config);
}

}  // namespace ufce
