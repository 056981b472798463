#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ufce/data.hpp"

namespace ufce {

inline constexpr std::size_t kDefaultMiNeighbors = 3;
inline constexpr std::size_t kDefaultTopPairs = 5;

/// Kraskov-Stoegbauer-Grassberger estimator (first variant, max-norm) of
/// I(x;y) in nats. Result is clipped at zero.
double ksg_mi(std::span<const double> x, std::span<const double> y, std::size_t k = kDefaultMiNeighbors);

/// kNN estimator of I(x;c) for a continuous x and a discrete c (Ross, 2014).
double mixed_mi(std::span<const double> x, std::span<const double> c, std::size_t k = kDefaultMiNeighbors);

/// Plug-in MI between two discrete columns.
double discrete_mi(std::span<const double> a, std::span<const double> b);

/// Dispatches on the feature kinds. Throws ArgumentError when n <= k or the
/// columns differ in length; a constant column gives 0.
double estimate_mi(std::span<const double> xi, std::span<const double> xj, std::size_t k = kDefaultMiNeighbors,
                   FeatureKind kind_i = FeatureKind::numeric, FeatureKind kind_j = FeatureKind::numeric);

struct MIPair {
  std::size_t i = 0;  // i < j
  std::size_t j = 0;
  double score = 0.0;

  friend bool operator==(const MIPair&, const MIPair&) = default;
};

/// Scores every unordered pair of `features`, highest first; equal scores
/// keep lexicographic (i, j) order.
std::vector<MIPair> rank_pairs(const Dataset& dataset, std::span<const std::size_t> features,
                               std::size_t k = kDefaultMiNeighbors);
std::vector<MIPair> rank_pairs(const Dataset& dataset, std::size_t k = kDefaultMiNeighbors);

struct Triplet {
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t k = 0;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

/// (i, j, u) for each of the first `top_m` pairs and each user feature u not
/// already in the pair. Throws ArgumentError if top_m exceeds the pair count.
std::vector<Triplet> form_triplets(std::span<const MIPair> pairs, std::span<const std::size_t> user_features,
                                   std::size_t top_m);

}  // namespace ufce
