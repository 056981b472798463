#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "ufce/data.hpp"
#include "ufce/explainer.hpp"
#include "ufce/metrics.hpp"
#include "ufce/model.hpp"

namespace ufce {

enum class FeedbackLevel { VL, L, M, F, MF };

inline constexpr std::array<FeedbackLevel, 5> kFeedbackLevels{FeedbackLevel::VL, FeedbackLevel::L, FeedbackLevel::M,
                                                              FeedbackLevel::F, FeedbackLevel::MF};

double feedback_fraction(FeedbackLevel level) noexcept;
std::string_view level_name(FeedbackLevel level) noexcept;

/// Numeric features get [x_i, x_i + fraction * MAD_i]; categorical features
/// get [x_i, alternate code]. `features` defaults to every feature.
PerturbationMap make_feedback(double fraction, const Instance& x, const Schema& schema,
                              std::span<const std::size_t> features = {});
PerturbationMap make_feedback(FeedbackLevel level, const Instance& x, const Schema& schema,
                              std::span<const std::size_t> features = {});

/// Numeric upper bounds x_i + u_i with u_i uniform in (0, observed_max - x_i].
PerturbationMap random_feedback(const Instance& x, const Schema& schema, std::uint64_t seed,
                                std::span<const std::size_t> features = {});

struct BenchConfig {
  std::size_t pool_size = 50;
  std::uint64_t seed = 0;
  std::size_t folds = 5;
  std::size_t repetitions = 10;
  std::size_t candidates_per_method = 5;
  double actionability_threshold = kActionabilityThreshold;
  double rq3_fraction = 0.5;
  ExplainConfig explain;
  LogisticConfig model;

  [[nodiscard]] nlohmann::ordered_json to_json() const;
};

/// One method under one condition (feedback level, repetition or dataset).
struct ReportRow {
  std::string condition;
  std::string method;
  double pool = 0;
  double attempted = 0;
  double generated = 0;
  double plausible = 0;
  double actionable = 0;
  double feasible = 0;
  double feasible_pct = 0;
  MetricSummary prox_jac, prox_euc, sparsity, actionability;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct TimingRow {
  std::string condition;
  std::string method;
  std::size_t instances = 0;  // attempted
  std::size_t generated = 0;
  double total_seconds = 0.0;
  double mean_seconds = 0.0;  // total over generated CEs
};

struct ExperimentReport {
  std::string experiment;  // rq1, rq2, rq3
  std::vector<std::string> datasets;
  std::uint64_t seed = 0;
  nlohmann::ordered_json config;
  std::vector<ReportRow> rows;
  std::vector<TimingRow> timing;
  std::map<std::string, std::size_t> notes;  // reason tag -> occurrences
  std::size_t verification_failures = 0;
  /// Every emitted candidate, for independent re-checking.
  struct Emitted {
    std::string condition;
    Method method = Method::single;
    std::size_t dataset = 0;
    std::size_t fold = 0;
    Instance x;
    CandidateCE candidate;
    PerturbationMap feedback;
    Subspace subspace;
  };
  std::vector<Emitted> emitted;
  double setup_seconds = 0.0;

  [[nodiscard]] const ReportRow* find(std::string_view condition, std::string_view method) const;
};

struct NamedDataset {
  std::string name;
  Dataset data;
};

/// Test instances predicted != t, shuffled by seed, at most `pool_size`.
std::vector<std::size_t> draw_pool(const Dataset& test, const Classifier& f, int t, std::size_t pool_size,
                                   std::uint64_t seed);

ExperimentReport run_rq1(const NamedDataset& dataset, const BenchConfig& config);
ExperimentReport run_rq2(const NamedDataset& dataset, const BenchConfig& config);
ExperimentReport run_rq3(std::span<const NamedDataset> datasets, const BenchConfig& config);

enum class ReportFormat { json, csv, markdown };

std::string emit_report(const ExperimentReport& report, ReportFormat format);
std::string emit_timing(const ExperimentReport& report);
std::vector<ReportRow> rows_from_csv(const std::string& csv);
std::vector<ReportRow> rows_from_json(const std::string& json);
const std::vector<std::string>& report_columns();

}  // namespace ufce
