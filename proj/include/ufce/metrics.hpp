#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "ufce/data.hpp"

namespace ufce {

inline constexpr double kNumericChangeTolerance = 1e-9;
inline constexpr double kActionabilityThreshold = 0.3;

struct Sparsity {
  std::size_t count = 0;
  double fraction = 0.0;
};

/// Numeric slots count as changed when |z_i - x_i| > 1e-9, categorical
/// slots on any difference.
Sparsity sparsity(const Instance& z, const Instance& x, const Schema& schema);
std::vector<std::size_t> changed_indices(const Instance& z, const Instance& x, const Schema& schema);

/// Share of categorical slots that differ; 0 without categorical features.
double prox_jac(const Instance& z, const Instance& x, const Schema& schema);
/// Sum of |z_i - x_i| / MAD_i over numeric features (MAD floored at 1e-9).
double prox_euc(const Instance& z, const Instance& x, const Schema& schema);
/// |changed ∩ user| / |changed|, 0 when nothing changed.
double actionability(const Instance& z, const Instance& x, const Schema& schema,
                     std::span<const std::size_t> user_features);
bool feasibility(bool valid, bool plausible, double actionability_fraction,
                 double threshold = kActionabilityThreshold);

struct MetricsRecord {
  std::size_t sparsity_count = 0;
  double sparsity_fraction = 0.0;
  double prox_jac = 0.0;
  double prox_euc = 0.0;
  double actionability_fraction = 0.0;
  bool valid = false;
  bool plausible = false;
  bool feasible = false;
  std::optional<double> elapsed_seconds;

  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

MetricsRecord evaluate(const Instance& z, const Instance& x, const Schema& schema,
                       std::span<const std::size_t> user_features, bool valid, bool plausible,
                       double threshold = kActionabilityThreshold);

/// Column order: prox_jac, prox_euc, sparsity, actionability, plausible,
/// feasible, then sparsity_fraction, valid, elapsed_seconds.
const std::vector<std::string>& metrics_columns();
nlohmann::ordered_json to_json(const MetricsRecord& r);
MetricsRecord metrics_from_json(const nlohmann::json& j);
std::string to_csv_row(const MetricsRecord& r);
std::string metrics_csv_header();

struct MetricSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for fewer than two values

  friend bool operator==(const MetricSummary&, const MetricSummary&) = default;
};

MetricSummary summarize(std::span<const double> values);

/// Means over the records given; callers pass generated counterfactuals only.
struct MetricsAggregate {
  std::size_t count = 0;
  MetricSummary prox_jac, prox_euc, sparsity, actionability, seconds;
  std::size_t valid = 0, plausible = 0, actionable = 0, feasible = 0;
};

MetricsAggregate aggregate(std::span<const MetricsRecord> records, double threshold = kActionabilityThreshold);

}  // namespace ufce
