#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ufce {

enum class FeatureKind { numeric, categorical };

/// Per-feature description plus the statistics the explainer relies on.
/// Categorical features are binary; their two codes are kept in ascending
/// order but carry no ordinal meaning.
struct FeatureSchema {
  std::string name;
  FeatureKind kind = FeatureKind::numeric;
  double observed_min = 0.0;
  double observed_max = 0.0;
  double mad = 0.0;
  bool is_protected = false;
  std::array<double, 2> categories{0.0, 1.0};

  [[nodiscard]] bool is_numeric() const noexcept { return kind == FeatureKind::numeric; }
  [[nodiscard]] bool is_categorical() const noexcept { return kind == FeatureKind::categorical; }

  /// The other category code. Unknown codes map to the second category.
  [[nodiscard]] double alternate(double code) const noexcept {
    return code == categories[1] ? categories[0] : categories[1];
  }
};

struct Schema {
  std::vector<FeatureSchema> features;
  std::string label;
  std::string positive_class;

  [[nodiscard]] std::size_t size() const noexcept { return features.size(); }
  [[nodiscard]] const FeatureSchema& operator[](std::size_t i) const { return features[i]; }
  [[nodiscard]] FeatureSchema& operator[](std::size_t i) { return features[i]; }

  [[nodiscard]] std::optional<std::size_t> index_of(std::string_view name) const;
  /// Throws SchemaError when the name is unknown.
  [[nodiscard]] std::size_t require_index(std::string_view name) const;

  [[nodiscard]] std::vector<std::size_t> numeric_indices() const;
  [[nodiscard]] std::vector<std::size_t> categorical_indices() const;
  [[nodiscard]] std::vector<std::size_t> protected_indices() const;
  [[nodiscard]] std::vector<double> mads() const;
  [[nodiscard]] std::vector<std::string> names() const;

  /// Stable 64-bit fingerprint over names, kinds, category codes and label
  /// definition. Statistics are excluded.
  [[nodiscard]] std::uint64_t hash() const;
  [[nodiscard]] std::string hash_hex() const;
};

struct Instance {
  std::vector<double> values;

  Instance() = default;
  explicit Instance(std::vector<double> v) : values(std::move(v)) {}
  Instance(std::initializer_list<double> v) : values(v) {}

  [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
  [[nodiscard]] double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  [[nodiscard]] std::span<const double> view() const noexcept { return values; }

  /// Copy with column `i` removed.
  [[nodiscard]] Instance without(std::size_t i) const;

  friend bool operator==(const Instance&, const Instance&) = default;
};

struct Dataset {
  Schema schema;
  std::vector<Instance> rows;
  std::vector<int> labels;

  [[nodiscard]] std::size_t size() const noexcept { return rows.size(); }
  [[nodiscard]] std::size_t dimension() const noexcept { return schema.size(); }
  [[nodiscard]] bool empty() const noexcept { return rows.empty(); }
  [[nodiscard]] std::vector<double> column(std::size_t i) const;
  /// Rows at `indices` in the given order; the schema is shared unchanged.
  [[nodiscard]] Dataset subset(std::span<const std::size_t> indices) const;
  /// Throws SchemaError if a row breaks its schema.
  void validate() const;
};

/// Descriptor naming the label column and feature roles of a CSV file.
struct SchemaConfig {
  std::string label;
  std::vector<std::string> categorical;
  std::vector<std::string> protected_features;
  std::string positive_class = "1";

  static SchemaConfig from_json_text(const std::string& text);
  static SchemaConfig from_file(const std::filesystem::path& path);
};

Dataset load_dataset(const std::filesystem::path& csv_path, const SchemaConfig& config);
Dataset parse_dataset(const std::string& csv_text, const SchemaConfig& config);

/// Median with the midpoint convention for even lengths.
double median(std::vector<double> values);
/// Median absolute deviation; throws ArgumentError on an empty list.
double compute_mad(std::span<const double> values);

/// Recomputes min, max and MAD of every feature from `rows`.
void refit_statistics(Schema& schema, std::span<const Instance> rows);

/// Rows whose ground-truth label equals `t`, in their original order.
Dataset desired_space(const Dataset& dataset, int t);
std::vector<std::size_t> desired_space_indices(const Dataset& dataset, int t);

struct Fold {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

/// Seeded k-fold partition. Training statistics are refit on the training
/// rows and the test split shares the training schema.
std::vector<Fold> split_folds(const Dataset& dataset, std::size_t k, std::uint64_t seed);

/// Min-max normalization of numeric features; categorical codes pass through.
class Scaler {
 public:
  Scaler() = default;
  Scaler(std::vector<double> min, std::vector<double> max, std::vector<bool> numeric);

  [[nodiscard]] Instance apply(const Instance& raw) const;
  [[nodiscard]] Instance invert(const Instance& normalized) const;
  [[nodiscard]] double apply(std::size_t feature, double value) const;
  [[nodiscard]] double invert(std::size_t feature, double value) const;

  [[nodiscard]] std::size_t dimension() const noexcept { return min_.size(); }
  [[nodiscard]] const std::vector<double>& min() const noexcept { return min_; }
  [[nodiscard]] const std::vector<double>& max() const noexcept { return max_; }
  [[nodiscard]] const std::vector<bool>& numeric() const noexcept { return numeric_; }

 private:
  std::vector<double> min_;
  std::vector<double> max_;
  std::vector<bool> numeric_;
};

Scaler fit_scaler(const Dataset& dataset);

}  // namespace ufce
