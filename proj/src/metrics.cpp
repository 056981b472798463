#include "ufce/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ufce/errors.hpp"

namespace ufce {

namespace {

void check(const Instance& z, const Instance& x, const Schema& schema) {
  if (z.size() != schema.size() || x.size() != schema.size()) {
    throw ArgumentError("metrics: instance does not match schema dimension");
  }
}

std::string number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::vector<std::size_t> changed_indices(const Instance& z, const Instance& x, const Schema& schema) {
  check(z, x, schema);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const bool differs = schema[i].is_categorical() ? z[i] != x[i] : std::fabs(z[i] - x[i]) > kNumericChangeTolerance;
    if (differs) out.push_back(i);
  }
  return out;
}

Sparsity sparsity(const Instance& z, const Instance& x, const Schema& schema) {
  const auto n = changed_indices(z, x, schema).size();
  return {n, schema.size() > 0 ? static_cast<double>(n) / static_cast<double>(schema.size()) : 0.0};
}

double prox_jac(const Instance& z, const Instance& x, const Schema& schema) {
  check(z, x, schema);
  std::size_t total = 0, differ = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!schema[i].is_categorical()) continue;
    ++total;
    differ += z[i] != x[i];
  }
  return total > 0 ? static_cast<double>(differ) / static_cast<double>(total) : 0.0;
}

double prox_euc(const Instance& z, const Instance& x, const Schema& schema) {
  check(z, x, schema);
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!schema[i].is_numeric()) continue;
    s += std::fabs(z[i] - x[i]) / std::max(schema[i].mad, 1e-9);
  }
  return s;
}

double actionability(const Instance& z, const Instance& x, const Schema& schema,
                     std::span<const std::size_t> user_features) {
  const auto changed = changed_indices(z, x, schema);
  if (changed.empty()) return 0.0;
  std::size_t inside = 0;
  for (const auto i : changed) {
    inside += std::find(user_features.begin(), user_features.end(), i) != user_features.end();
  }
  return static_cast<double>(inside) / static_cast<double>(changed.size());
}

bool feasibility(bool valid, bool plausible, double actionability_fraction, double threshold) {
  return valid && plausible && actionability_fraction >= threshold;
}

MetricsRecord evaluate(const Instance& z, const Instance& x, const Schema& schema,
                       std::span<const std::size_t> user_features, bool valid, bool plausible, double threshold) {
  MetricsRecord r;
  const auto sp = sparsity(z, x, schema);
  r.sparsity_count = sp.count;
  r.sparsity_fraction = sp.fraction;
  r.prox_jac = prox_jac(z, x, schema);
  r.prox_euc = prox_euc(z, x, schema);
  r.actionability_fraction = actionability(z, x, schema, user_features);
  r.valid = valid;
  r.plausible = plausible;
  r.feasible = feasibility(valid, plausible, r.actionability_fraction, threshold);
  return r;
}

const std::vector<std::string>& metrics_columns() {
  static const std::vector<std::string> cols{"prox_jac",  "prox_euc",          "sparsity", "actionability",
                                             "plausible", "feasible",          "sparsity_fraction",
                                             "valid",     "elapsed_seconds"};
  return cols;
}

nlohmann::ordered_json to_json(const MetricsRecord& r) {
  nlohmann::ordered_json j;
  j["prox_jac"] = r.prox_jac;
  j["prox_euc"] = r.prox_euc;
  j["sparsity"] = r.sparsity_count;
  j["actionability"] = r.actionability_fraction;
  j["plausible"] = r.plausible;
  j["feasible"] = r.feasible;
  j["sparsity_fraction"] = r.sparsity_fraction;
  j["valid"] = r.valid;
  if (r.elapsed_seconds) j["elapsed_seconds"] = *r.elapsed_seconds;
  return j;
}

MetricsRecord metrics_from_json(const nlohmann::json& j) {
  MetricsRecord r;
  r.prox_jac = j.at("prox_jac").get<double>();
  r.prox_euc = j.at("prox_euc").get<double>();
  r.sparsity_count = j.at("sparsity").get<std::size_t>();
  r.actionability_fraction = j.at("actionability").get<double>();
  r.plausible = j.at("plausible").get<bool>();
  r.feasible = j.at("feasible").get<bool>();
  r.sparsity_fraction = j.at("sparsity_fraction").get<double>();
  r.valid = j.at("valid").get<bool>();
  if (j.contains("elapsed_seconds")) r.elapsed_seconds = j.at("elapsed_seconds").get<double>();
  return r;
}

std::string metrics_csv_header() {
  std::string out;
  for (const auto& c : metrics_columns()) out += (out.empty() ? "" : ",") + c;
  return out;
}

std::string to_csv_row(const MetricsRecord& r) {
  std::string out = number(r.prox_jac) + "," + number(r.prox_euc) + "," + std::to_string(r.sparsity_count) + "," +
                    number(r.actionability_fraction) + "," + (r.plausible ? "1" : "0") + "," +
                    (r.feasible ? "1" : "0") + "," + number(r.sparsity_fraction) + "," + (r.valid ? "1" : "0") + ",";
  if (r.elapsed_seconds) out += number(*r.elapsed_seconds);
  return out;
}

MetricSummary summarize(std::span<const double> values) {
  MetricSummary s;
  s.count = values.size();
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (const double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

MetricsAggregate aggregate(std::span<const MetricsRecord> records, double threshold) {
  MetricsAggregate a;
  a.count = records.size();
  std::vector<double> jac, euc, spa, act, sec;
  for (const auto& r : records) {
    jac.push_back(r.prox_jac);
    euc.push_back(r.prox_euc);
    spa.push_back(static_cast<double>(r.sparsity_count));
    act.push_back(r.actionability_fraction);
    if (r.elapsed_seconds) sec.push_back(*r.elapsed_seconds);
    a.valid += r.valid;
    a.plausible += r.plausible;
    a.actionable += r.actionability_fraction >= threshold;
    a.feasible += r.feasible;
  }
  a.prox_jac = summarize(jac);
  a.prox_euc = summarize(euc);
  a.sparsity = summarize(spa);
  a.actionability = summarize(act);
  a.seconds = summarize(sec);
  return a;
}

}  // namespace ufce
