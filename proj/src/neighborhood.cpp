#include "ufce/neighborhood.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ufce/errors.hpp"

namespace ufce {

namespace {

bool closer(const Neighbor& a, const Neighbor& b) {
  return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
}

std::string format_bound(double v) {
  std::string s = std::to_string(v);
  s.erase(s.find_last_not_of('0') + 1);
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

}  // namespace

Embedding::Embedding(const Schema& schema, Scaler scaler) : scaler_(std::move(scaler)) {
  if (scaler_.dimension() != schema.size()) throw ArgumentError("scaler does not match schema");
  for (const auto& f : schema.features) {
    categorical_.push_back(f.is_categorical());
    second_code_.push_back(f.categories[1]);
  }
}

std::vector<double> Embedding::embed(const Instance& raw) const {
  if (raw.size() != dimension()) throw ArgumentError("instance does not match schema dimension");
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[i] = categorical_[i] ? (raw[i] == second_code_[i] ? 1.0 : 0.0) : scaler_.apply(i, raw[i]);
  }
  return out;
}

double Embedding::distance(std::span<const double> a, std::span<const double> b) const {
  double sq = 0.0, mismatches = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (categorical_[i]) {
      mismatches += a[i] != b[i] ? 1.0 : 0.0;
    } else {
      const double d = a[i] - b[i];
      sq += d * d;
    }
  }
  return std::sqrt(sq) + mismatches;
}

NeighborTree::NeighborTree(std::vector<std::vector<double>> points, Embedding metric)
    : points_(std::move(points)), metric_(std::move(metric)) {
  if (points_.empty()) throw ArgumentError("cannot build a neighbor tree over zero points");
  for (const auto& p : points_) {
    if (p.size() != metric_.dimension()) throw ArgumentError("point dimension does not match the metric");
  }
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.reserve(2 * points_.size() / kLeafSize + 1);
  build(0, points_.size(), 1);
}

int NeighborTree::build(std::size_t begin, std::size_t end, std::size_t level) {
  depth_ = std::max(depth_, level);
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({begin, end, 0, 0.0, -1, -1});
  if (end - begin <= kLeafSize) return id;

  // Split on the axis of largest spread.
  const std::size_t d = metric_.dimension();
  std::size_t axis = 0;
  double best = -1.0;
  for (std::size_t a = 0; a < d; ++a) {
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = begin; i < end; ++i) {
      lo = std::min(lo, points_[order_[i]][a]);
      hi = std::max(hi, points_[order_[i]][a]);
    }
    if (hi - lo > best) {
      best = hi - lo;
      axis = a;
    }
  }
  if (best <= 0.0) return id;  // all points coincide

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin), order_.begin() + static_cast<std::ptrdiff_t>(mid),
                   order_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t l, std::size_t r) {
                     return points_[l][axis] < points_[r][axis];
                   });
  nodes_[id].axis = axis;
  nodes_[id].split = points_[order_[mid]][axis];
  const int left = build(begin, mid, level + 1);
  const int right = build(mid, end, level + 1);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void NeighborTree::radius_search(int node, std::span<const double> q, double radius, std::vector<Neighbor>& out) const {
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  if (n.left < 0) {
    for (std::size_t i = n.begin; i < n.end; ++i) {
      const double dist = metric_.distance(q, points_[order_[i]]);
      if (dist <= radius) out.push_back({order_[i], dist});
    }
    return;
  }
  const double diff = q[n.axis] - n.split;
  if (std::max(0.0, diff) <= radius) radius_search(n.left, q, radius, out);
  if (std::max(0.0, -diff) <= radius) radius_search(n.right, q, radius, out);
}

std::vector<Neighbor> NeighborTree::radius_query(std::span<const double> q, double radius) const {
  if (q.size() != metric_.dimension()) throw ArgumentError("query dimension does not match the tree");
  std::vector<Neighbor> out;
  if (!(radius >= 0.0)) return out;
  radius_search(0, q, radius, out);
  std::sort(out.begin(), out.end(), closer);
  return out;
}

void NeighborTree::knn_search(int node, std::span<const double> q, std::size_t k, std::optional<std::size_t> exclude,
                              std::vector<Neighbor>& heap) const {
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  if (n.left < 0) {
    for (std::size_t i = n.begin; i < n.end; ++i) {
      const std::size_t idx = order_[i];
      if (exclude && *exclude == idx) continue;
      const Neighbor cand{idx, metric_.distance(q, points_[idx])};
      if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end(), closer);
      } else if (closer(cand, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), closer);
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end(), closer);
      }
    }
    return;
  }
  const double diff = q[n.axis] - n.split;
  const int near = diff < 0.0 ? n.left : n.right;
  const int far = diff < 0.0 ? n.right : n.left;
  knn_search(near, q, k, exclude, heap);
  if (heap.size() < k || std::fabs(diff) <= heap.front().distance) knn_search(far, q, k, exclude, heap);
}

std::vector<Neighbor> NeighborTree::knn(std::span<const double> q, std::size_t k,
                                        std::optional<std::size_t> exclude) const {
  if (q.size() != metric_.dimension()) throw ArgumentError("query dimension does not match the tree");
  std::vector<Neighbor> heap;
  if (k == 0) return heap;
  heap.reserve(k + 1);
  knn_search(0, q, k, exclude, heap);
  std::sort_heap(heap.begin(), heap.end(), closer);
  return heap;
}

double NeighborTree::farthest_distance(std::span<const double> q) const {
  double best = 0.0;
  for (const auto& p : points_) best = std::max(best, metric_.distance(q, p));
  return best;
}

std::vector<std::size_t> NeighborTree::indices() const { return order_; }

std::vector<Neighbor> fnn(const NeighborTree& tree, const Instance& x, double radius) {
  if (!(radius > 0.0)) throw ArgumentError("fnn needs a positive radius");
  return tree.radius_query(tree.metric().embed(x), radius);
}

NeighborhoodResult fnn(const NeighborTree& tree, const Instance& x, const RadiusPolicy& policy) {
  const auto q = tree.metric().embed(x);
  NeighborhoodResult r;
  r.radius = policy.fraction * tree.farthest_distance(q);
  if (!(r.radius > 0.0)) r.radius = 1e-12;  // every point coincides with x
  r.neighbors = tree.radius_query(q, r.radius);
  while (r.neighbors.size() < policy.min_neighbors && r.doublings < policy.max_doublings) {
    r.radius *= 2.0;
    ++r.doublings;
    r.neighbors = tree.radius_query(q, r.radius);
  }
  return r;
}

const Bound* FeatureBounds::find(std::size_t feature) const {
  for (const auto& b : entries) {
    if (b.feature == feature) return &b;
  }
  return nullptr;
}

std::vector<std::size_t> FeatureBounds::features() const {
  std::vector<std::size_t> out;
  out.reserve(entries.size());
  for (const auto& b : entries) out.push_back(b.feature);
  return out;
}

void FeatureBounds::set(std::size_t feature, double lower, double upper) {
  for (auto& b : entries) {
    if (b.feature == feature) {
      b.lower = lower;
      b.upper = upper;
      return;
    }
  }
  entries.push_back({feature, lower, upper});
}

void PerturbationMap::validate(const Schema& schema) const {
  for (const auto& b : entries) {
    if (b.feature >= schema.size()) throw ArgumentError("perturbation map names an unknown feature");
    const auto& f = schema[b.feature];
    if (f.is_numeric() && b.lower > b.upper) {
      throw ArgumentError("bounds for '" + f.name + "' have lower > upper");
    }
    if (f.is_categorical()) {
      for (const double code : {b.lower, b.upper}) {
        if (code != f.categories[0] && code != f.categories[1]) {
          throw ArgumentError("bounds for '" + f.name + "' hold an unknown category code");
        }
      }
    }
  }
}

Subspace intervals(std::span<const Instance> nn, const PerturbationMap& p, const Schema& schema, bool strict) {
  if (nn.empty()) throw ArgumentError("intervals needs at least one neighbor");
  Subspace s;
  for (const auto& b : p.entries) {
    const auto& f = schema[b.feature];
    if (f.is_categorical()) {
      s.entries.push_back(b);
      continue;
    }
    double mn = INFINITY, mx = -INFINITY;
    for (const auto& row : nn) {
      mn = std::min(mn, row[b.feature]);
      mx = std::max(mx, row[b.feature]);
    }
    double lo, hi;
    if (strict) {
      lo = std::max(b.lower, mn);
      hi = std::min(b.upper, mx);
    } else if (b.upper >= mx) {
      lo = b.lower;
      hi = mx;
    } else if (b.lower <= mn) {
      lo = mn;
      hi = b.upper;
    } else {
      lo = b.lower;
      hi = b.upper;
    }
    if (lo > hi) {
      s.warnings.push_back("feature '" + f.name + "' dropped: requested [" + format_bound(b.lower) + ", " +
                           format_bound(b.upper) + "] does not meet neighborhood range [" + format_bound(mn) + ", " +
                           format_bound(mx) + "]");
      continue;
    }
    s.entries.push_back({b.feature, lo, hi});
  }
  return s;
}

}  // namespace ufce
