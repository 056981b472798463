#include "ufce/model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "ufce/errors.hpp"

namespace ufce {

double sigmoid(double v) noexcept {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

namespace {

double softplus(double u) noexcept { return std::max(u, 0.0) + std::log1p(std::exp(-std::fabs(u))); }

struct Design {
  Eigen::MatrixXd x;  // n x d
  Eigen::VectorXd y;
};

Design make_design(std::span<const Instance> rows, std::span<const int> labels) {
  if (rows.size() != labels.size()) throw ArgumentError("rows and labels differ in length");
  if (rows.empty()) throw ArgumentError("cannot fit on zero rows");
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(rows.front().size());
  Design out{Eigen::MatrixXd(n, d), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(r.size()) != d) throw ArgumentError("ragged design matrix");
    for (Eigen::Index j = 0; j < d; ++j) out.x(i, j) = r[static_cast<std::size_t>(j)];
    out.y(i) = labels[static_cast<std::size_t>(i)];
  }
  return out;
}

double penalized_loss(const Design& D, const Eigen::VectorXd& w, double b, double l2) {
  const Eigen::VectorXd u = (D.x * w).array() + b;
  double total = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) total += softplus(u(i)) - D.y(i) * u(i);
  return total / static_cast<double>(u.size()) + 0.5 * l2 * w.squaredNorm();
}

LogisticFit fit_newton(const Design& D, const LogisticConfig& cfg) {
  const auto n = D.x.rows();
  const auto d = D.x.cols();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  double b = 0.0;
  LogisticFit fit;
  double loss = penalized_loss(D, w, b, cfg.l2);
  fit.loss_history.push_back(loss);

  Eigen::MatrixXd xb(n, d + 1);
  xb.leftCols(d) = D.x;
  xb.col(d).setOnes();

  for (std::size_t it = 0; it < cfg.epochs; ++it) {
    const Eigen::VectorXd u = (D.x * w).array() + b;
    Eigen::VectorXd p(n), s(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      p(i) = sigmoid(u(i));
      s(i) = p(i) * (1.0 - p(i));
    }
    Eigen::VectorXd grad = xb.transpose() * (p - D.y) / static_cast<double>(n);
    grad.head(d) += cfg.l2 * w;
    Eigen::MatrixXd hess = xb.transpose() * s.asDiagonal() * xb / static_cast<double>(n);
    hess.diagonal().head(d).array() += cfg.l2;
    hess.diagonal().array() += 1e-12;
    const Eigen::VectorXd step = hess.ldlt().solve(grad);

    double t = 1.0;
    double next_loss = loss;
    Eigen::VectorXd w_next = w;
    double b_next = b;
    for (int halving = 0; halving < 40; ++halving) {
      w_next = w - t * step.head(d);
      b_next = b - t * step(d);
      next_loss = penalized_loss(D, w_next, b_next, cfg.l2);
      if (std::isfinite(next_loss) && next_loss <= loss) break;
      t *= 0.5;
    }
    if (!(next_loss <= loss)) break;
    w = w_next;
    b = b_next;
    const double decrease = loss - next_loss;
    loss = next_loss;
    fit.loss_history.push_back(loss);
    if (decrease < cfg.tolerance) break;
  }
  fit.weights.assign(w.data(), w.data() + d);
  fit.bias = b;
  return fit;
}

LogisticFit fit_gradient_descent(const Design& D, const LogisticConfig& cfg) {
  const auto n = D.x.rows();
  const auto d = D.x.cols();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  double b = 0.0;
  LogisticFit fit;
  double loss = penalized_loss(D, w, b, cfg.l2);
  fit.loss_history.push_back(loss);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const Eigen::VectorXd u = (D.x * w).array() + b;
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) r(i) = sigmoid(u(i)) - D.y(i);
    const Eigen::VectorXd gw = D.x.transpose() * r / static_cast<double>(n) + cfg.l2 * w;
    const double gb = r.mean();
    w -= cfg.learning_rate * gw;
    b -= cfg.learning_rate * gb;
    const double next = penalized_loss(D, w, b, cfg.l2);
    fit.loss_history.push_back(next);
    const double decrease = loss - next;
    loss = next;
    if (decrease >= 0.0 && decrease < cfg.tolerance) break;
  }
  fit.weights.assign(w.data(), w.data() + d);
  fit.bias = b;
  return fit;
}

}  // namespace

LogisticFit fit_logistic(std::span<const Instance> normalized_rows, std::span<const int> labels,
                         const LogisticConfig& config) {
  const auto positives = std::count(labels.begin(), labels.end(), 1);
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(labels.size())) {
    throw DegenerateLabels("training labels contain a single class");
  }
  const Design D = make_design(normalized_rows, labels);
  return config.solver == LogisticSolver::newton ? fit_newton(D, config) : fit_gradient_descent(D, config);
}

LogisticClassifier::LogisticClassifier(std::vector<double> weights, double bias, Scaler scaler)
    : weights_(std::move(weights)), bias_(bias), scaler_(std::move(scaler)) {
  if (scaler_.dimension() != weights_.size()) throw ArgumentError("scaler and weights differ in dimension");
}

double LogisticClassifier::predict_proba_normalized(std::span<const double> normalized) const {
  if (normalized.size() != weights_.size()) {
    throw ArgumentError("instance has " + std::to_string(normalized.size()) + " values, model expects " +
                        std::to_string(weights_.size()));
  }
  double u = bias_;
  for (std::size_t i = 0; i < weights_.size(); ++i) u += weights_[i] * normalized[i];
  return sigmoid(u);
}

double LogisticClassifier::predict_proba(const Instance& x) const {
  if (x.size() != weights_.size()) {
    throw ArgumentError("instance has " + std::to_string(x.size()) + " values, model expects " +
                        std::to_string(weights_.size()));
  }
  double u = bias_;
  for (std::size_t i = 0; i < weights_.size(); ++i) u += weights_[i] * scaler_.apply(i, x[i]);
  return sigmoid(u);
}

LogisticClassifier train_logistic(const Dataset& train, const LogisticConfig& config,
                                  std::vector<double>& loss_history) {
  if (train.empty()) throw ArgumentError("train_logistic needs rows");
  Scaler scaler = fit_scaler(train);
  std::vector<Instance> normalized;
  normalized.reserve(train.size());
  for (const auto& r : train.rows) normalized.push_back(scaler.apply(r));
  LogisticFit fit = fit_logistic(normalized, train.labels, config);
  loss_history = std::move(fit.loss_history);
  return LogisticClassifier(std::move(fit.weights), fit.bias, std::move(scaler));
}

LogisticClassifier train_logistic(const Dataset& train, const LogisticConfig& config) {
  std::vector<double> unused;
  return train_logistic(train, config, unused);
}

double accuracy(const Classifier& f, const Dataset& data) {
  if (data.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) hits += f.predict(data.rows[i]) == data.labels[i];
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

CrossValidation cross_validate(const Dataset& dataset, std::size_t k, std::uint64_t seed,
                               const LogisticConfig& config) {
  CrossValidation cv;
  for (const auto& fold : split_folds(dataset, k, seed)) {
    const auto model = train_logistic(fold.train, config);
    cv.fold_accuracy.push_back(accuracy(model, fold.test));
  }
  const double n = static_cast<double>(cv.fold_accuracy.size());
  cv.mean_accuracy = std::accumulate(cv.fold_accuracy.begin(), cv.fold_accuracy.end(), 0.0) / n;
  double ss = 0.0;
  for (const double a : cv.fold_accuracy) ss += (a - cv.mean_accuracy) * (a - cv.mean_accuracy);
  cv.std_accuracy = cv.fold_accuracy.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  return cv;
}

double FeaturePredictor::raw_response(const Instance& partial) const {
  if (partial.size() != input_dim_) {
    throw ArgumentError("feature predictor expects " + std::to_string(input_dim_) + " values, got " +
                        std::to_string(partial.size()));
  }
  double v = intercept_;
  for (std::size_t i = 0; i < coefficients_.size(); ++i) v += coefficients_[i] * partial[i];
  return v;
}

double FeaturePredictor::predict(const Instance& partial) const {
  if (partial.size() != input_dim_) {
    throw ArgumentError("feature predictor expects " + std::to_string(input_dim_) + " values, got " +
                        std::to_string(partial.size()));
  }
  if (kind_ == Kind::regressor) {
    const double v = raw_response(partial);
    if (!std::isfinite(v)) return clamp_lo_;
    return std::clamp(v, clamp_lo_, clamp_hi_);
  }
  if (constant_code_) return *constant_code_;
  return classifier_->predict(partial) == 1 ? categories_[1] : categories_[0];
}

FeaturePredictor train_feature_predictor(const Dataset& train, std::size_t target,
                                         const LogisticConfig& config) {
  if (target >= train.dimension()) throw ArgumentError("target feature index out of range");
  if (train.empty()) throw ArgumentError("train_feature_predictor needs rows");
  const auto& tf = train.schema[target];

  FeaturePredictor p;
  p.target_ = target;
  p.input_dim_ = train.dimension() - 1;
  p.clamp_lo_ = tf.observed_min;
  p.clamp_hi_ = tf.observed_max;
  p.categories_ = tf.categories;

  std::vector<Instance> inputs;
  inputs.reserve(train.size());
  for (const auto& r : train.rows) inputs.push_back(r.without(target));

  if (tf.is_categorical()) {
    p.kind_ = FeaturePredictor::Kind::classifier;
    std::vector<int> y;
    y.reserve(train.size());
    for (const auto& r : train.rows) y.push_back(r[target] == tf.categories[1] ? 1 : 0);
    const auto ones = std::count(y.begin(), y.end(), 1);
    if (ones == 0 || ones == static_cast<std::ptrdiff_t>(y.size())) {
      p.constant_code_ = ones == 0 ? tf.categories[0] : tf.categories[1];
      return p;
    }
    Dataset sub;
    for (std::size_t c = 0; c < train.dimension(); ++c) {
      if (c != target) sub.schema.features.push_back(train.schema[c]);
    }
    sub.rows = std::move(inputs);
    sub.labels = std::move(y);
    p.classifier_ = train_logistic(sub, config);
    return p;
  }

  // Least squares on standardized inputs, mapped back to raw units.
  p.kind_ = FeaturePredictor::Kind::regressor;
  const auto n = static_cast<Eigen::Index>(train.size());
  const auto m = static_cast<Eigen::Index>(p.input_dim_);
  Eigen::MatrixXd z(n, m);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) z(i, j) = inputs[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    y(i) = train.rows[static_cast<std::size_t>(i)][target];
  }
  const Eigen::VectorXd mean = z.colwise().mean();
  Eigen::VectorXd scale(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double sd = std::sqrt((z.col(j).array() - mean(j)).square().mean());
    scale(j) = sd > 0.0 ? sd : 0.0;
  }
  Eigen::MatrixXd zs(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    if (scale(j) > 0.0) {
      zs.col(j) = (z.col(j).array() - mean(j)) / scale(j);
    } else {
      zs.col(j).setZero();
    }
  }
  const double ymean = y.mean();
  const Eigen::VectorXd yc = y.array() - ymean;
  Eigen::MatrixXd gram = zs.transpose() * zs;
  const Eigen::VectorXd rhs = zs.transpose() * yc;

  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  bool singular = ldlt.info() != Eigen::Success;
  if (!singular && m > 0) {
    const Eigen::VectorXd diag = ldlt.vectorD();
    const double dmax = diag.cwiseAbs().maxCoeff();
    singular = dmax <= 0.0 || diag.minCoeff() <= 1e-12 * dmax;
  }
  if (singular) {
    gram.diagonal().array() += kRidgeLambda * static_cast<double>(n);
    ldlt.compute(gram);
    p.used_ridge_ = true;
  }
  Eigen::VectorXd beta = m > 0 ? Eigen::VectorXd(ldlt.solve(rhs)) : Eigen::VectorXd();

  p.coefficients_.assign(static_cast<std::size_t>(m), 0.0);
  double intercept = ymean;
  for (Eigen::Index j = 0; j < m; ++j) {
    if (scale(j) <= 0.0 || !std::isfinite(beta(j))) continue;
    const double raw = beta(j) / scale(j);
    p.coefficients_[static_cast<std::size_t>(j)] = raw;
    intercept -= raw * mean(j);
  }
  p.intercept_ = intercept;
  return p;
}

std::string ModelFile::to_json_text() const {
  nlohmann::json doc;
  doc["schema_hash"] = schema_hash;
  doc["weights"] = model.weights();
  doc["bias"] = model.bias();
  nlohmann::json scaler;
  scaler["min"] = model.scaler().min();
  scaler["max"] = model.scaler().max();
  std::vector<int> numeric;
  for (const bool b : model.scaler().numeric()) numeric.push_back(b ? 1 : 0);
  scaler["numeric"] = numeric;
  doc["scaler"] = scaler;
  if (!dataset.empty()) doc["dataset"] = dataset;
  if (!data_path.empty()) doc["data"] = data_path;
  if (!schema_path.empty()) doc["schema"] = schema_path;
  return doc.dump(2) + "\n";
}

ModelFile ModelFile::from_json_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
    ModelFile mf;
    mf.schema_hash = doc.at("schema_hash").get<std::string>();
    auto weights = doc.at("weights").get<std::vector<double>>();
    const double bias = doc.at("bias").get<double>();
    const auto& s = doc.at("scaler");
    auto lo = s.at("min").get<std::vector<double>>();
    auto hi = s.at("max").get<std::vector<double>>();
    std::vector<bool> numeric;
    for (const int v : s.at("numeric").get<std::vector<int>>()) numeric.push_back(v != 0);
    mf.model = LogisticClassifier(std::move(weights), bias, Scaler(std::move(lo), std::move(hi), std::move(numeric)));
    mf.dataset = doc.value("dataset", "");
    mf.data_path = doc.value("data", "");
    mf.schema_path = doc.value("schema", "");
    return mf;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed model file: ") + e.what());
  }
}

}  // namespace ufce
