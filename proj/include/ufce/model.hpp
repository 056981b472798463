#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ufce/data.hpp"

namespace ufce {

/// Black-box binary classifier over raw-unit instances.
class Classifier {
 public:
  static constexpr double kThreshold = 0.5;

  virtual ~Classifier() = default;
  [[nodiscard]] virtual double predict_proba(const Instance& x) const = 0;
  [[nodiscard]] virtual std::size_t dimension() const = 0;

  [[nodiscard]] int predict(const Instance& x) const {
    return predict_proba(x) >= kThreshold ? 1 : 0;
  }
};

enum class LogisticSolver { newton, gradient_descent };

struct LogisticConfig {
  LogisticSolver solver = LogisticSolver::newton;
  double learning_rate = 0.1;  // gradient descent only
  std::size_t epochs = 5000;   // iteration cap for either solver
  double l2 = 1e-4;
  double tolerance = 1e-7;     // stop once the loss decrease falls below this
};

double sigmoid(double v) noexcept;

/// Weights and bias fitted on already-normalized inputs.
struct LogisticFit {
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<double> loss_history;  // mean penalized log-loss, one per iteration
};

/// Throws DegenerateLabels when only one class is present.
LogisticFit fit_logistic(std::span<const Instance> normalized_rows, std::span<const int> labels,
                         const LogisticConfig& config);

/// Logistic regression that normalizes raw inputs with its own scaler.
class LogisticClassifier final : public Classifier {
 public:
  LogisticClassifier() = default;
  LogisticClassifier(std::vector<double> weights, double bias, Scaler scaler);

  [[nodiscard]] double predict_proba(const Instance& x) const override;
  [[nodiscard]] std::size_t dimension() const override { return weights_.size(); }
  [[nodiscard]] double predict_proba_normalized(std::span<const double> normalized) const;

  [[nodiscard]] const std::vector<double>& weights() const noexcept { return weights_; }
  [[nodiscard]] double bias() const noexcept { return bias_; }
  [[nodiscard]] const Scaler& scaler() const noexcept { return scaler_; }

 private:
  std::vector<double> weights_;
  double bias_ = 0.0;
  Scaler scaler_;
};

LogisticClassifier train_logistic(const Dataset& train, const LogisticConfig& config = {});
/// Same as train_logistic but also returns the per-iteration loss trace.
LogisticClassifier train_logistic(const Dataset& train, const LogisticConfig& config,
                                  std::vector<double>& loss_history);

double accuracy(const Classifier& f, const Dataset& data);

struct CrossValidation {
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // sample standard deviation
  std::vector<double> fold_accuracy;
};

CrossValidation cross_validate(const Dataset& dataset, std::size_t k, std::uint64_t seed,
                               const LogisticConfig& config = {});

/// Predicts one feature from the remaining d-1 features: least squares for
/// numeric targets, logistic regression for categorical ones.
class FeaturePredictor {
 public:
  enum class Kind { regressor, classifier };

  FeaturePredictor() = default;

  [[nodiscard]] std::size_t target() const noexcept { return target_; }
  [[nodiscard]] Kind kind() const noexcept { return kind_; }
  [[nodiscard]] std::size_t input_dimension() const noexcept { return input_dim_; }

  /// `partial` holds the d-1 remaining values in schema order.
  [[nodiscard]] double predict(const Instance& partial) const;
  [[nodiscard]] double predict_from(const Instance& full) const { return predict(full.without(target_)); }

  /// Unclamped linear response in raw units (regressor only).
  [[nodiscard]] double raw_response(const Instance& partial) const;
  [[nodiscard]] const std::vector<double>& coefficients() const noexcept { return coefficients_; }
  [[nodiscard]] double intercept() const noexcept { return intercept_; }
  [[nodiscard]] bool used_ridge() const noexcept { return used_ridge_; }

 private:
  friend FeaturePredictor train_feature_predictor(const Dataset&, std::size_t, const LogisticConfig&);

  std::size_t target_ = 0;
  Kind kind_ = Kind::regressor;
  std::size_t input_dim_ = 0;
  double clamp_lo_ = 0.0;
  double clamp_hi_ = 0.0;
  std::vector<double> coefficients_;
  double intercept_ = 0.0;
  bool used_ridge_ = false;
  std::array<double, 2> categories_{0.0, 1.0};
  std::optional<LogisticClassifier> classifier_;
  std::optional<double> constant_code_;
};

inline constexpr double kRidgeLambda = 1e-6;

FeaturePredictor train_feature_predictor(const Dataset& train, std::size_t target,
                                         const LogisticConfig& config = {});

/// Persisted model document: {schema_hash, weights, bias, scaler} plus the
/// dataset it was trained on.
struct ModelFile {
  std::string schema_hash;
  LogisticClassifier model;
  std::string dataset;
  std::string data_path;
  std::string schema_path;

  [[nodiscard]] std::string to_json_text() const;
  static ModelFile from_json_text(const std::string& text);
};

}  // namespace ufce
