#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ufce/data.hpp"
#include "ufce/mi.hpp"
#include "ufce/model.hpp"
#include "ufce/neighborhood.hpp"
#include "ufce/plausibility.hpp"

namespace ufce {

enum class Method { single, double_, triple };

std::string_view method_name(Method m) noexcept;        // "single", "double", "triple"
std::string_view method_label(Method m) noexcept;       // "UFCE1", "UFCE2", "UFCE3"
std::optional<Method> parse_method(std::string_view s) noexcept;

struct CandidateCE {
  Instance z;
  Method method = Method::single;
  std::vector<std::size_t> changed;  // ascending feature indices with z_i != x_i
  bool valid = false;
  bool plausible = false;
};

/// Indices where z and x differ (exact comparison).
std::vector<std::size_t> changed_features(const Instance& z, const Instance& x);

struct ExplainConfig {
  int t = 1;
  double lambda = 1.0;
  std::size_t steps_per_feature = 100;
  std::size_t traverse_samples = 100;
  RadiusPolicy radius;
  bool strict_intersection = true;
  std::uint64_t seed = 0;
  std::size_t top_m = kDefaultTopPairs;
  std::size_t mi_neighbors = kDefaultMiNeighbors;
  LofConfig lof;
  bool linear_fallback = true;
  /// Successful candidates each method may return; 1 reproduces the
  /// return-first behaviour of the double and triple searches.
  std::size_t max_candidates_per_method = 1;

  /// Throws ArgumentError on out-of-range settings.
  void validate() const;
};

inline constexpr double kMadFloor = 1e-9;

struct DeltaTerms {
  double jaccard = 0.0;            // mismatched categorical slots / categorical count
  double euclid = 0.0;             // sum |z_i - x_i| / MAD_i over numeric slots
  double euclid_normalized = 0.0;  // euclid / sum(range_i / MAD_i)
  double total = 0.0;              // jaccard + lambda * euclid_normalized
};

/// The mixed distance between a candidate and the instance it explains.
class DistanceModel {
 public:
  DistanceModel() = default;
  DistanceModel(const Schema& schema, double lambda);

  [[nodiscard]] DeltaTerms terms(const Instance& z, const Instance& x) const;
  [[nodiscard]] double operator()(const Instance& z, const Instance& x) const { return terms(z, x).total; }
  [[nodiscard]] double lambda() const noexcept { return lambda_; }
  [[nodiscard]] double bound() const noexcept { return bound_; }
  /// One entry per numeric feature whose MAD is zero.
  [[nodiscard]] const std::vector<std::string>& warnings() const noexcept { return warnings_; }

 private:
  std::vector<bool> categorical_;
  std::vector<double> weight_;  // 1 / MAD, floored
  std::size_t categorical_count_ = 0;
  double bound_ = 1.0;
  double lambda_ = 1.0;
  std::vector<std::string> warnings_;
};

double delta(const Instance& z, const Instance& x, double lambda, const Schema& schema);

/// Everything the searches share for one training split: the classifier,
/// the desired space with its kd-tree and LOF model, per-feature
/// predictors, and the ranked MI pairs.
struct ExplainContext {
  Dataset train;
  Dataset desired;
  std::shared_ptr<const Classifier> model;
  ExplainConfig config;
  Embedding metric;
  LofModel lof;  // also owns the kd-tree over the desired space
  std::vector<FeaturePredictor> predictors;
  std::vector<MIPair> mi_pairs;
  DistanceModel distance;
  double setup_seconds = 0.0;

  [[nodiscard]] const Schema& schema() const noexcept { return train.schema; }
  [[nodiscard]] const NeighborTree& tree() const noexcept { return lof.tree(); }
  [[nodiscard]] bool accepts(const Instance& z) const { return model->predict(z) == config.t && lof.is_plausible(z); }
};

/// Throws DesiredSpaceEmpty if no training row has label config.t.
std::shared_ptr<const ExplainContext> build_context(Dataset train, std::shared_ptr<const Classifier> model,
                                                    const ExplainConfig& config = {});

/// Per-feature binary search inside p (numeric) or a code flip (categorical).
std::vector<CandidateCE> single_f(const ExplainContext& ctx, const Instance& x, const PerturbationMap& p);
std::vector<CandidateCE> double_f(const ExplainContext& ctx, const Instance& x, const Subspace& subspace);
std::vector<CandidateCE> triple_f(const ExplainContext& ctx, const Instance& x, const Subspace& subspace,
                                  std::span<const std::size_t> user_features);

/// MI pairs whose features are both in the subspace and unprotected, limited to top_m.
std::vector<MIPair> eligible_pairs(const ExplainContext& ctx, const Subspace& subspace);

struct MethodTiming {
  double neighborhood = 0.0;  // FNN + INTERVALS
  double single = 0.0;
  double double_ = 0.0;
  double triple = 0.0;
};

struct ExplainResult {
  std::vector<CandidateCE> candidates;  // single first, then double, then triple
  Subspace subspace;
  double radius = 0.0;
  std::size_t neighbor_count = 0;
  std::vector<std::string> warnings;
  MethodTiming timing;
};

/// Runs all three searches for x under feedback p. Throws NothingToExplain
/// when f(x) already equals t.
ExplainResult run_ufce(const ExplainContext& ctx, const Instance& x, const PerturbationMap& p);

/// Valid candidate with the smallest delta; ties prefer fewer changes, then
/// single before double before triple.
std::optional<CandidateCE> select_best(const Instance& x, std::span<const CandidateCE> candidates, int t,
                                       const Classifier& f, const DistanceModel& distance);

/// Valid candidates ordered by the same key select_best minimizes.
std::vector<CandidateCE> rank_candidates(const Instance& x, std::span<const CandidateCE> candidates, int t,
                                         const Classifier& f, const DistanceModel& distance);

}  // namespace ufce
