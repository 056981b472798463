// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "support/oracles.hpp"
#include "ufce/bench.hpp"
#include "ufce/cli.hpp"
#include "ufce/explainer.hpp"
#include "ufce/metrics.hpp"
#include "ufce/mi.hpp"
#include "ufce/model.hpp"
#include "ufce/neighborhood.hpp"
#include "ufce/plausibility.hpp"
#include "ufce/service.hpp"

using namespace ufce;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(bool pass, const std::string& name, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !pass;
}

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const fs::path kRoot = UFCE_DATA_DIR;
constexpr std::uint64_t kSeeds[] = {0, 1, 2};
constexpr std::size_t kPool = 50;

struct Rq1Runs {
  Dataset bank;
  std::vector<ExperimentReport> reports;  // one per seed
  double seconds = 0.0;
};

// ---------------------------------------------------------------- fidelity

void model_fidelity() {
  const std::map<std::string, double> reference = {
      {"graduate", 0.86}, {"bank", 0.97}, {"wine", 0.74}, {"bupa", 0.73}, {"movie", 0.68}};
  service::DatasetRegistry registry(kRoot);
  const auto start = Clock::now();
  bool ok = true;
  std::string detail;
  for (const auto& [id, target] : reference) {
    const auto cv = cross_validate(registry.load(id), 5, 0);
    const bool within = std::fabs(cv.mean_accuracy - target) <= 0.07;
    ok = ok && within;
    detail += fmt("%s %.3f (ref %.2f)%s; ", id.c_str(), cv.mean_accuracy, target, within ? "" : " OUT");
  }
  const double secs = since(start);
  ok = ok && secs < 120.0;
  report(ok, "model fidelity", detail + fmt("%.1f s", secs));
}

// ---------------------------------------------------------------- RQ1 runs

Rq1Runs run_rq1_seeds() {
  Rq1Runs runs;
  runs.bank = service::DatasetRegistry(kRoot).load("bank");
  const auto start = Clock::now();
  for (const auto seed : kSeeds) {
    BenchConfig cfg;
    cfg.seed = seed;
    cfg.pool_size = kPool;
    runs.reports.push_back(run_rq1({"bank", runs.bank}, cfg));
  }
  runs.seconds = since(start);
  return runs;
}

void sparsity_contract(const Rq1Runs& runs) {
  std::size_t total = 0, violations = 0;
  std::array<std::size_t, 3> per{};
  for (const auto& r : runs.reports) {
    for (const auto& e : r.emitted) {
      const std::size_t limit = static_cast<std::size_t>(e.method) + 1;
      std::size_t changed = 0;
      for (std::size_t i = 0; i < e.x.size(); ++i) changed += e.candidate.z[i] != e.x[i];
      const bool bad = e.method == Method::single ? changed != 1 : (changed == 0 || changed > limit);
      violations += bad;
      ++per[static_cast<std::size_t>(e.method)];
      ++total;
    }
  }
  report(total >= 200 && violations == 0, "sparsity contract",
         fmt("%zu CEs (single %zu, double %zu, triple %zu), %zu violations", total, per[0], per[1], per[2], violations));
}

double feasible_count(const ExperimentReport& r, const std::string& level, const std::string& method) {
  const auto* row = r.find(level, method);
  return row ? row->feasible : 0.0;
}

void feedback_monotonicity(const Rq1Runs& runs) {
  const std::vector<std::string> levels = {"VL", "L", "M", "F", "MF"};
  bool ok = runs.seconds < 900.0;
  std::string detail;
  for (const char* method : {"UFCE2", "UFCE3"}) {
    detail += std::string(method) + " [";
    for (std::size_t s = 0; s < runs.reports.size(); ++s) {
      for (std::size_t l = 0; l < levels.size(); ++l) {
        detail += fmt("%s%.0f", l ? "/" : "", feasible_count(runs.reports[s], levels[l], method));
      }
      detail += s + 1 < runs.reports.size() ? " " : "] ";
    }
    for (std::size_t l = 0; l + 1 < levels.size(); ++l) {
      int rising = 0;
      for (const auto& r : runs.reports) {
        rising += feasible_count(r, levels[l + 1], method) >= feasible_count(r, levels[l], method);
      }
      if (rising < 2) {
        ok = false;
        detail += fmt("(%s->%s only %d/3) ", levels[l].c_str(), levels[l + 1].c_str(), rising);
      }
    }
  }
  report(ok, "feedback monotonicity", detail + fmt("%.1f s for 3 seeds", runs.seconds));
}

void method_ordering(const Rq1Runs& runs) {
  std::array<double, 3> pct{};
  for (std::size_t m = 0; m < 3; ++m) {
    const auto label = std::string(method_label(static_cast<Method>(m)));
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : runs.reports) {
      for (const auto& row : r.rows) {
        if (row.method != label) continue;
        sum += row.feasible_pct;
        ++n;
      }
    }
    pct[m] = n ? sum / static_cast<double>(n) : 0.0;
  }
  const bool ok = pct[2] - pct[1] >= 5.0 && pct[1] - pct[0] >= 5.0;
  report(ok, "method ordering",
         fmt("feasible%% UFCE1 %.1f, UFCE2 %.1f, UFCE3 %.1f (need gaps >= 5)", pct[0], pct[1], pct[2]));
}

// Rebuilds each seed's model and desired space from scratch and checks every
// emitted CE with the brute-force LOF and plain bound comparisons.
void independent_check(const Rq1Runs& runs) {
  std::size_t checked = 0, invalid = 0, implausible = 0, outside = 0, protected_changed = 0;
  for (std::size_t s = 0; s < runs.reports.size(); ++s) {
    const auto folds = split_folds(runs.bank, 5, kSeeds[s]);
    const Dataset& train = folds[0].train;
    const auto model = train_logistic(train);
    const auto desired = desired_space(train, 1);
    const Embedding metric(train.schema, fit_scaler(train));
    std::vector<std::vector<double>> pts;
    for (const auto& row : desired.rows) pts.push_back(metric.embed(row));
    const LofConfig lof;
    const oracle::Lof ref(pts, oracle::categorical_mask(train.schema), std::min(lof.k, desired.size() - 1));
    for (const auto& e : runs.reports[s].emitted) {
      const Instance& z = e.candidate.z;
      ++checked;
      invalid += model.predict(z) != 1;
      implausible += ref.score(metric.embed(z)) > lof.threshold + 1e-9;
      const FeatureBounds& bounds = e.method == Method::single ? static_cast<const FeatureBounds&>(e.feedback)
                                                               : static_cast<const FeatureBounds&>(e.subspace);
      for (std::size_t i = 0; i < z.size(); ++i) {
        if (z[i] == e.x[i]) continue;
        protected_changed += train.schema[i].is_protected;
        const Bound* b = bounds.find(i);
        if (!b) {
          ++outside;
        } else if (train.schema[i].is_categorical()) {
          outside += z[i] != b->lower && z[i] != b->upper;
        } else {
          const double slack = 1e-9 * std::max(1.0, std::fabs(b->upper));
          outside += z[i] < b->lower - slack || z[i] > b->upper + slack;
        }
      }
    }
  }
  const bool ok = checked > 0 && invalid + implausible + outside + protected_changed == 0;
  report(ok, "validity/plausibility/adherence",
         fmt("%zu CEs re-checked: %zu invalid, %zu implausible, %zu out of bounds, %zu protected changes", checked,
             invalid, implausible, outside, protected_changed));
}

void timing(const Rq1Runs& runs) {
  std::array<double, 3> secs{}, made{};
  for (const auto& r : runs.reports) {
    for (const auto& t : r.timing) {
      const auto m = parse_method(t.method == "UFCE1" ? "single" : t.method == "UFCE2" ? "double" : "triple");
      secs[static_cast<std::size_t>(*m)] += t.total_seconds;
      made[static_cast<std::size_t>(*m)] += static_cast<double>(t.generated);
    }
  }
  std::array<double, 3> per{};
  for (std::size_t m = 0; m < 3; ++m) per[m] = made[m] > 0 ? secs[m] / made[m] : INFINITY;
  const bool ok = per[0] < 1.0 && per[2] < 5.0 && per[0] < per[1] && per[1] < per[2];
  report(ok, "timing", fmt("s/CE UFCE1 %.4f, UFCE2 %.4f, UFCE3 %.4f (ref 0.28 / 0.47 / 1.10)", per[0], per[1], per[2]));
}

// ---------------------------------------------------------------- oracles

bool lof_oracle(std::string& detail) {
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t num = 1 + uniform_index(rng, 3), cat = uniform_index(rng, 2);
    const auto schema = oracle::unit_schema(num, cat);
    const Embedding metric(schema, oracle::unit_scaler(schema));
    const std::size_t n = 30 + uniform_index(rng, 171);
    const std::size_t k = 1 + uniform_index(rng, 20);
    const auto pts = oracle::random_points(n, num, cat, rng);
    const auto model = fit_lof(pts, metric, {.k = k});
    const oracle::Lof ref(pts, oracle::categorical_mask(schema), k);
    for (const auto& q : oracle::random_points(10, num, cat, rng)) {
      worst = std::max(worst, std::fabs(model.score_embedded(q) - ref.score(q)));
    }
  }
  detail += fmt("(a) LOF max diff %.2e; ", worst);
  return worst <= 1e-6;
}

bool tree_oracle(std::string& detail) {
  Rng rng(2025);
  int mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t num = 1 + uniform_index(rng, 4), cat = uniform_index(rng, 3);
    const auto schema = oracle::unit_schema(num, cat);
    const Embedding metric(schema, oracle::unit_scaler(schema));
    const auto pts = oracle::random_points(50 + uniform_index(rng, 200), num, cat, rng);
    const NeighborTree tree(pts, metric);
    const auto q = oracle::random_points(1, num, cat, rng)[0];
    const double radius = 0.05 + uniform01(rng) * 1.2;
    const auto got = tree.radius_query(q, radius);
    const auto expected = oracle::radius_scan(pts, q, oracle::categorical_mask(schema), radius);
    bool same = got.size() == expected.size();
    for (std::size_t i = 0; same && i < got.size(); ++i) same = got[i].index == expected[i];
    mismatches += !same;
  }
  detail += fmt("(b) kd-tree %d/100 mismatches; ", mismatches);
  return mismatches == 0;
}

struct SumClassifier final : Classifier {
  [[nodiscard]] std::size_t dimension() const override { return 3; }
  [[nodiscard]] double predict_proba(const Instance& z) const override { return z[0] + z[1] > 6.0 ? 1.0 : 0.0; }
};

bool select_best_oracle(std::string& detail) {
  Schema s;
  s.features.push_back({.name = "a", .observed_min = 0.0, .observed_max = 10.0, .mad = 1.0});
  s.features.push_back({.name = "b", .observed_min = 0.0, .observed_max = 10.0, .mad = 2.0});
  s.features.push_back({.name = "c", .kind = FeatureKind::categorical, .observed_max = 1.0});
  const DistanceModel d(s, 1.0);
  const SumClassifier f;
  Rng rng(2026);
  int mismatches = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const Instance x{uniform01(rng) * 3, uniform01(rng) * 3, 0.0};
    std::vector<CandidateCE> cs(1 + uniform_index(rng, 12));
    for (auto& c : cs) {
      c.z = Instance{std::round(10 * uniform01(rng)), std::round(10 * uniform01(rng)), uniform01(rng) < 0.3 ? 1.0 : 0.0};
      c.method = static_cast<Method>(uniform_index(rng, 3));
      c.changed = changed_features(c.z, x);
    }
    // Exhaustive: smallest delta among valid candidates, computed term by term.
    double best = INFINITY;
    for (const auto& c : cs) {
      if (f.predict(c.z) != 1) continue;
      const double euclid = std::fabs(c.z[0] - x[0]) / 1.0 + std::fabs(c.z[1] - x[1]) / 2.0;
      const double bound = 10.0 / 1.0 + 10.0 / 2.0;
      best = std::min(best, (c.z[2] != x[2] ? 1.0 : 0.0) + euclid / bound);
    }
    const auto got = select_best(x, cs, 1, f, d);
    if (std::isinf(best)) {
      mismatches += got.has_value();
    } else {
      mismatches += !got || std::fabs(d(got->z, x) - best) > 1e-12;
    }
  }
  detail += fmt("(c) select_best %d/50 mismatches; ", mismatches);
  return mismatches == 0;
}

bool ksg_oracle(std::string& detail) {
  bool ok = true;
  for (const double rho : {0.0, 0.5, 0.9}) {
    Rng rng(static_cast<std::uint64_t>(1000 * rho) + 7);
    std::vector<double> x, y;
    for (int i = 0; i < 5000; ++i) {
      const double a = standard_normal(rng), b = standard_normal(rng);
      x.push_back(a);
      y.push_back(rho * a + std::sqrt(1 - rho * rho) * b);
    }
    const double est = ksg_mi(x, y), exact = -0.5 * std::log(1 - rho * rho);
    ok = ok && std::fabs(est - exact) <= 0.05;
    detail += fmt("(d) rho %.1f KSG %.4f vs %.4f; ", rho, est, exact);
  }
  return ok;
}

void oracle_equivalences() {
  std::string detail;
  bool ok = lof_oracle(detail);
  ok = tree_oracle(detail) && ok;
  ok = select_best_oracle(detail) && ok;
  ok = ksg_oracle(detail) && ok;
  report(ok, "oracle equivalences", detail.substr(0, detail.size() - 2));
}

// ---------------------------------------------------------------- determinism

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void determinism() {
  const fs::path dir = fs::temp_directory_path() / ("ufce_accept_" + std::to_string(::getpid()));
  std::vector<std::string> bodies;
  int rc_sum = 0;
  for (const char* run : {"a", "b"}) {
    const std::vector<std::string> args = {"ufce",     "bench",         "rq2", "--dataset", "bank", "--seed", "7",
                                           "--out",    (dir / run).string(), "--data-dir", kRoot.string()};
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    rc_sum += run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    bodies.push_back(slurp(dir / run / "report.json"));
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  const bool ok = rc_sum == 0 && !bodies[0].empty() && bodies[0] == bodies[1];
  report(ok, "determinism", fmt("bench rq2 --seed 7 twice: exit codes sum %d, %zu bytes, %s", rc_sum, bodies[0].size(),
                                bodies[0] == bodies[1] ? "identical" : "different"));
}

}  // namespace

int main() {
  model_fidelity();
  const auto runs = run_rq1_seeds();
  sparsity_contract(runs);
  feedback_monotonicity(runs);
  method_ordering(runs);
  independent_check(runs);
  oracle_equivalences();
  timing(runs);
  determinism();
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
