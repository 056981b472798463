#include "ufce/mi.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numeric>
#include <queue>

#include "ufce/errors.hpp"
#include "ufce/random.hpp"

namespace ufce {

namespace {

constexpr double kEulerGamma = 0.57721566490153286061;

// psi(n) for n = 0..max (psi(0) unused).
std::vector<double> digamma_table(std::size_t max) {
  std::vector<double> t(max + 1, 0.0);
  if (max >= 1) t[1] = -kEulerGamma;
  for (std::size_t n = 2; n <= max; ++n) t[n] = t[n - 1] + 1.0 / static_cast<double>(n - 1);
  return t;
}

bool is_constant(std::span<const double> v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *lo == *hi;
}

std::uint64_t column_seed(std::span<const double> v) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const double x : v) {
    h ^= std::bit_cast<std::uint64_t>(x);
    h *= 1099511628211ULL;
  }
  return h;
}

// Unit variance plus a tiny deterministic jitter so that ties have measure zero.
std::vector<double> prepare(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (const double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / n);
  std::vector<double> out(v.size());
  double abs_mean = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = sd > 0.0 ? (v[i] - mean) / sd : 0.0;
    abs_mean += std::fabs(out[i]);
  }
  abs_mean /= n;
  Rng rng(column_seed(v));
  const double amp = 1e-10 * std::max(1.0, abs_mean);
  for (double& x : out) x += amp * standard_normal(rng);
  return out;
}

std::size_t count_within(const std::vector<double>& sorted, double centre, double radius) {
  // |v - centre| < radius
  const auto lo = std::upper_bound(sorted.begin(), sorted.end(), centre - radius);
  const auto hi = std::lower_bound(sorted.begin(), sorted.end(), centre + radius);
  return hi > lo ? static_cast<std::size_t>(hi - lo) : 0;
}

std::size_t distinct(std::span<const double> v) {
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  return static_cast<std::size_t>(std::unique(s.begin(), s.end()) - s.begin());
}

void check_columns(std::span<const double> a, std::span<const double> b, std::size_t k) {
  if (a.size() != b.size()) throw ArgumentError("MI columns differ in length");
  if (k < 1) throw ArgumentError("MI needs k >= 1");
  if (a.size() <= k) {
    throw ArgumentError("MI needs more than k=" + std::to_string(k) + " samples, got " + std::to_string(a.size()));
  }
}

}  // namespace

double ksg_mi(std::span<const double> x, std::span<const double> y, std::size_t k) {
  check_columns(x, y, k);
  if (is_constant(x) || is_constant(y)) return 0.0;
  const std::size_t n = x.size();
  const auto xs = prepare(x);
  const auto ys = prepare(y);

  // Sweep along whichever axis separates points better.
  const bool along_x = distinct(x) >= distinct(y);
  const auto& a = along_x ? xs : ys;
  const auto& b = along_x ? ys : xs;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return a[l] < a[r]; });

  std::vector<double> sx = xs, sy = ys;
  std::sort(sx.begin(), sx.end());
  std::sort(sy.begin(), sy.end());
  const auto psi = digamma_table(n + 1);

  double acc = 0.0;
  std::priority_queue<double> heap;
  for (std::size_t pos = 0; pos < n; ++pos) {
    const std::size_t i = order[pos];
    heap = {};
    auto consider = [&](std::size_t j) {
      const double d = std::max(std::fabs(a[j] - a[i]), std::fabs(b[j] - b[i]));
      if (heap.size() < k) {
        heap.push(d);
      } else if (d < heap.top()) {
        heap.pop();
        heap.push(d);
      }
    };
    std::size_t left = pos, right = pos + 1;
    while (left > 0 || right < n) {
      const double gap_l = left > 0 ? a[i] - a[order[left - 1]] : INFINITY;
      const double gap_r = right < n ? a[order[right]] - a[i] : INFINITY;
      const double gap = std::min(gap_l, gap_r);
      if (heap.size() == k && gap >= heap.top()) break;
      if (gap_l <= gap_r) {
        consider(order[--left]);
      } else {
        consider(order[right++]);
      }
    }
    const double eps = heap.top();
    const std::size_t nx = count_within(sx, xs[i], eps) - 1;
    const std::size_t ny = count_within(sy, ys[i], eps) - 1;
    acc += psi[nx + 1] + psi[ny + 1];
  }
  const double mi = psi[k] + psi[n] - acc / static_cast<double>(n);
  return std::max(0.0, mi);
}

double mixed_mi(std::span<const double> x, std::span<const double> c, std::size_t k) {
  check_columns(x, c, k);
  if (is_constant(x) || is_constant(c)) return 0.0;
  const std::size_t n = x.size();
  const auto xs = prepare(x);

  std::map<double, std::vector<double>> by_class;
  for (std::size_t i = 0; i < n; ++i) by_class[c[i]].push_back(xs[i]);
  for (auto& [code, v] : by_class) std::sort(v.begin(), v.end());

  // Points alone in their class carry no neighbor information and are dropped.
  std::vector<double> all;
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < n; ++i) {
    if (by_class[c[i]].size() > 1) {
      kept.push_back(i);
      all.push_back(xs[i]);
    }
  }
  if (kept.empty()) return 0.0;
  std::sort(all.begin(), all.end());
  const auto psi = digamma_table(n + 1);

  double sum_k = 0.0, sum_nc = 0.0, sum_m = 0.0;
  for (const std::size_t i : kept) {
    const auto& cls = by_class[c[i]];
    const std::size_t ki = std::min(k, cls.size() - 1);
    // k-th nearest same-class distance by merging outward from x_i.
    auto pos = static_cast<std::size_t>(std::lower_bound(cls.begin(), cls.end(), xs[i]) - cls.begin());
    std::size_t left = pos, right = pos + 1;  // cls[pos] == xs[i] is self
    double d = 0.0;
    for (std::size_t taken = 0; taken < ki; ++taken) {
      const double dl = left > 0 ? xs[i] - cls[left - 1] : INFINITY;
      const double dr = right < cls.size() ? cls[right] - xs[i] : INFINITY;
      if (dl <= dr) {
        d = dl;
        --left;
      } else {
        d = dr;
        ++right;
      }
    }
    const std::size_t m = count_within(all, xs[i], d);  // includes self
    sum_k += psi[ki];
    sum_nc += psi[cls.size()];
    sum_m += psi[std::max<std::size_t>(m, 1)];
  }
  const double nk = static_cast<double>(kept.size());
  const double mi = psi[kept.size()] + (sum_k - sum_nc - sum_m) / nk;
  return std::max(0.0, mi);
}

double discrete_mi(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ArgumentError("MI columns differ in length");
  if (a.empty()) throw ArgumentError("MI needs samples");
  std::map<double, double> pa, pb;
  std::map<std::pair<double, double>, double> pab;
  const double w = 1.0 / static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    pa[a[i]] += w;
    pb[b[i]] += w;
    pab[{a[i], b[i]}] += w;
  }
  double mi = 0.0;
  for (const auto& [key, p] : pab) mi += p * std::log(p / (pa[key.first] * pb[key.second]));
  return std::max(0.0, mi);
}

double estimate_mi(std::span<const double> xi, std::span<const double> xj, std::size_t k, FeatureKind kind_i,
                   FeatureKind kind_j) {
  check_columns(xi, xj, k);
  const bool ci = kind_i == FeatureKind::categorical;
  const bool cj = kind_j == FeatureKind::categorical;
  if (ci && cj) return discrete_mi(xi, xj);
  if (ci) return mixed_mi(xj, xi, k);
  if (cj) return mixed_mi(xi, xj, k);
  return ksg_mi(xi, xj, k);
}

std::vector<MIPair> rank_pairs(const Dataset& dataset, std::span<const std::size_t> features, std::size_t k) {
  if (features.size() < 2) throw ArgumentError("rank_pairs needs at least two features");
  std::vector<std::size_t> f(features.begin(), features.end());
  std::sort(f.begin(), f.end());
  f.erase(std::unique(f.begin(), f.end()), f.end());
  for (const auto i : f) {
    if (i >= dataset.dimension()) throw ArgumentError("feature index out of range");
  }
  std::vector<std::vector<double>> cols(dataset.dimension());
  for (const auto i : f) cols[i] = dataset.column(i);

  std::vector<MIPair> pairs;
  for (std::size_t a = 0; a < f.size(); ++a) {
    for (std::size_t b = a + 1; b < f.size(); ++b) {
      const auto i = f[a], j = f[b];
      pairs.push_back({i, j, estimate_mi(cols[i], cols[j], k, dataset.schema[i].kind, dataset.schema[j].kind)});
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const MIPair& l, const MIPair& r) { return l.score > r.score; });
  return pairs;
}

std::vector<MIPair> rank_pairs(const Dataset& dataset, std::size_t k) {
  std::vector<std::size_t> all(dataset.dimension());
  std::iota(all.begin(), all.end(), 0);
  return rank_pairs(dataset, all, k);
}

std::vector<Triplet> form_triplets(std::span<const MIPair> pairs, std::span<const std::size_t> user_features,
                                   std::size_t top_m) {
  if (top_m > pairs.size()) {
    throw ArgumentError("top_m=" + std::to_string(top_m) + " exceeds " + std::to_string(pairs.size()) + " pairs");
  }
  std::vector<std::size_t> users(user_features.begin(), user_features.end());
  std::sort(users.begin(), users.end());
  users.erase(std::unique(users.begin(), users.end()), users.end());
  std::vector<Triplet> out;
  for (std::size_t p = 0; p < top_m; ++p) {
    for (const auto u : users) {
      if (u != pairs[p].i && u != pairs[p].j) out.push_back({pairs[p].i, pairs[p].j, u});
    }
  }
  return out;
}

}  // namespace ufce
