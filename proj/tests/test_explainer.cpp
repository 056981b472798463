#include <algorithm>
#include <cmath>
#include <filesystem>
#include <tuple>

#include "doctest.h"
#include "support/toys.hpp"
#include "ufce/errors.hpp"
#include "ufce/explainer.hpp"
#include "ufce/random.hpp"

using namespace ufce;

namespace {

Schema two_numeric(double mad0, double mad1) {
  Schema s;
  s.features.push_back({.name = "a", .observed_min = 0, .observed_max = 10, .mad = mad0});
  s.features.push_back({.name = "b", .observed_min = 0, .observed_max = 10, .mad = mad1});
  return s;
}

// Income uniform on [0, 100], Age uniform on [20, 60]; label Income >= 60.
Dataset income_toy(std::size_t n = 400, std::uint64_t seed = 1) {
  Rng rng(seed);
  std::vector<Instance> rows;
  for (std::size_t i = 0; i < n; ++i) rows.push_back({100.0 * uniform01(rng), 20.0 + 40.0 * uniform01(rng)});
  return toy::make({toy::numeric("Income"), toy::numeric("Age")}, rows,
                   [](const Instance& r) { return r[0] >= 60.0 ? 1 : 0; });
}

PerturbationMap bounds(std::initializer_list<Bound> b) {
  PerturbationMap p;
  p.entries = b;
  return p;
}

Subspace subspace_of(std::initializer_list<Bound> b) {
  Subspace s;
  s.entries = b;
  return s;
}

}  // namespace

TEST_CASE("delta examples") {
  SUBCASE("identical instances") {
    const auto s = two_numeric(2, 4);
    CHECK(delta(Instance{3, 4}, Instance{3, 4}, 1.0, s) == 0.0);
  }
  SUBCASE("MAD-weighted numeric term before normalization") {
    const DistanceModel d(two_numeric(2, 4), 1.0);
    const auto t = d.terms(Instance{2, 0}, Instance{0, 0});
    CHECK(t.euclid == doctest::Approx(1.0));
    CHECK(t.jaccard == 0.0);
    // range / MAD summed: 10/2 + 10/4
    CHECK(d.bound() == doctest::Approx(7.5));
    CHECK(t.total == doctest::Approx(1.0 / 7.5));
  }
  SUBCASE("all categorical slots differ") {
    Schema s = two_numeric(2, 4);
    s.features.push_back(toy::categorical("c0"));
    s.features.push_back(toy::categorical("c1"));
    const DistanceModel d(s, 1.0);
    const auto t = d.terms(Instance{1, 1, 1, 0}, Instance{1, 1, 0, 1});
    CHECK(t.jaccard == doctest::Approx(1.0));
    CHECK(t.euclid == 0.0);
    CHECK(d.terms(Instance{1, 1, 1, 1}, Instance{1, 1, 0, 1}).jaccard == doctest::Approx(0.5));
  }
  SUBCASE("zero MAD uses the floor and warns") {
    const DistanceModel d(two_numeric(2, 0), 1.0);
    REQUIRE(d.warnings().size() == 1);
    CHECK(d.warnings()[0].find("'b'") != std::string::npos);
    CHECK(d.terms(Instance{0, 1e-9}, Instance{0, 0}).euclid == doctest::Approx(1.0));
  }
  SUBCASE("lambda scales only the numeric part") {
    Schema s = two_numeric(2, 4);
    s.features.push_back(toy::categorical("c0"));
    const Instance z{2, 0, 1}, x{0, 0, 0};
    const double j = DistanceModel(s, 0.0)(z, x);
    CHECK(j == doctest::Approx(1.0));
    CHECK(DistanceModel(s, 3.0)(z, x) - j == doctest::Approx(3.0 * (DistanceModel(s, 1.0)(z, x) - j)));
  }
}

TEST_CASE("delta is symmetric, non-negative and zero only on identity") {
  Rng rng(5);
  Schema s = two_numeric(1.5, 0.5);
  s.features.push_back(toy::categorical("c"));
  const DistanceModel d(s, 1.0);
  for (int i = 0; i < 200; ++i) {
    const Instance a{10 * uniform01(rng), 10 * uniform01(rng), uniform01(rng) < 0.5 ? 0.0 : 1.0};
    const Instance b{10 * uniform01(rng), 10 * uniform01(rng), uniform01(rng) < 0.5 ? 0.0 : 1.0};
    CHECK(d(a, b) == doctest::Approx(d(b, a)));
    CHECK(d(a, b) > 0.0);
    CHECK(d(a, a) == 0.0);
  }
}

TEST_CASE("config validation") {
  ExplainConfig c;
  CHECK_NOTHROW(c.validate());
  c.lambda = -1;
  CHECK_THROWS_AS(c.validate(), ArgumentError);
  c = {};
  c.steps_per_feature = 1;
  CHECK_THROWS_AS(c.validate(), ArgumentError);
}

TEST_CASE("method names") {
  for (auto m : {Method::single, Method::double_, Method::triple}) CHECK(parse_method(method_name(m)) == m);
  CHECK(method_label(Method::triple) == "UFCE3");
  CHECK_FALSE(parse_method("quadruple").has_value());
}

TEST_CASE("single_f finds the smallest flip inside one step") {
  auto data = income_toy();
  ExplainConfig cfg;
  cfg.lof.threshold = 1e9;
  const auto ctx = build_context(data, toy::step_on(2, 0, 60.0), cfg);
  const Instance x{50.0, 40.0};
  const auto p = bounds({{0, 50.0, 100.0}});
  const auto out = single_f(*ctx, x, p);
  REQUIRE(out.size() == 1);
  const auto& c = out[0];
  CHECK(c.method == Method::single);
  CHECK(c.changed == std::vector<std::size_t>{0});
  CHECK(c.z[0] >= 60.0);
  CHECK(c.z[0] <= 61.0);

  // Binary search stops within two steps of the grid's first flip point.
  const double step = 0.5;
  double first = -1;
  for (int s = 0; s <= 100; ++s) {
    if (50.0 + step * s >= 60.0) {
      first = 50.0 + step * s;
      break;
    }
  }
  CHECK(c.z[0] <= first + 2 * step);
}

TEST_CASE("single_f binary search against exhaustive scan") {
  Rng rng(17);
  auto data = income_toy();
  ExplainConfig cfg;
  cfg.lof.threshold = 1e9;
  for (int trial = 0; trial < 40; ++trial) {
    const double threshold = 55.0 + 40.0 * uniform01(rng);
    const auto ctx = build_context(data, toy::step_on(2, 0, threshold), cfg);
    const Instance x{50.0 * uniform01(rng), 30.0};
    const double hi = x[0] + 60.0 * uniform01(rng);
    const auto out = single_f(*ctx, x, bounds({{0, x[0], hi}}));
    const double step = (hi - x[0]) / 100.0;
    bool grid_flip = false;
    for (int s = 0; s <= 100; ++s) grid_flip |= x[0] + step * s >= threshold;
    CHECK(out.empty() == !grid_flip);
    if (!out.empty()) {
      CHECK(out[0].z[0] >= threshold);
      CHECK(out[0].z[0] <= threshold + 2 * step);
    }
  }
}

TEST_CASE("single_f keeps shrinking: successful probes never grow") {
  auto data = income_toy();
  ExplainConfig cfg;
  cfg.lof.threshold = 1e9;
  std::vector<double> successes;
  auto f = std::make_shared<toy::FnClassifier>(2, [&](const Instance& z) {
    const bool ok = z[0] >= 71.3;
    if (ok && z[1] == 40.0) successes.push_back(z[0]);
    return ok ? 1.0 : 0.0;
  });
  const auto ctx = build_context(data, f, cfg);
  successes.clear();
  (void)single_f(*ctx, Instance{50.0, 40.0}, bounds({{0, 50.0, 100.0}}));
  REQUIRE(successes.size() >= 2);
  // make_candidate re-queries the winner last; drop it.
  successes.pop_back();
  for (std::size_t i = 1; i < successes.size(); ++i) CHECK(successes[i] <= successes[i - 1]);
}

TEST_CASE("single_f with no flipping feature in p returns nothing") {
  auto data = income_toy();
  ExplainConfig cfg;
  cfg.lof.threshold = 1e9;
  const auto ctx = build_context(data, toy::step_on(2, 0, 60.0), cfg);
  CHECK(single_f(*ctx, Instance{50.0, 40.0}, bounds({{1, 40.0, 60.0}})).empty());
  CHECK(single_f(*ctx, Instance{50.0, 40.0}, bounds({{0, 50.0, 55.0}})).empty());
}

TEST_CASE("single_f flips a categorical feature") {
  Rng rng(3);
  std::vector<Instance> rows;
  for (int i = 0; i < 200; ++i) rows.push_back({uniform01(rng), uniform01(rng) < 0.5 ? 0.0 : 1.0});
  auto features = std::vector<FeatureSchema>{toy::numeric("a"), toy::categorical("c")};
  auto data = toy::make(features, rows, [](const Instance& r) { return r[1] == 1.0 ? 1 : 0; });
  const auto ctx = build_context(data, toy::step_on(2, 1, 0.5));
  const Instance x{0.5, 0.0};
  const auto out = single_f(*ctx, x, bounds({{1, 0.0, 1.0}}));
  REQUIRE(out.size() == 1);
  CHECK(out[0].z == Instance{0.5, 1.0});
  CHECK(out[0].changed.size() == 1);
  CHECK(out[0].valid);
  CHECK(out[0].plausible);

  SUBCASE("protected features are left alone") {
    features[1].is_protected = true;
    auto locked = toy::make(features, rows, [](const Instance& r) { return r[1] == 1.0 ? 1 : 0; });
    const auto ctx2 = build_context(locked, toy::step_on(2, 1, 0.5));
    CHECK(single_f(*ctx2, x, bounds({{1, 0.0, 1.0}})).empty());
  }
  SUBCASE("p that does not allow the alternate code") {
    CHECK(single_f(*ctx, x, bounds({{1, 0.0, 0.0}})).empty());
  }
}

namespace {

// Income, Mortgage = 2 Income + 5, Age; label Income >= 60.
Dataset linked_pair(std::uint64_t seed = 2) {
  Rng rng(seed);
  std::vector<Instance> rows;
  for (int i = 0; i < 400; ++i) {
    const double inc = 100.0 * uniform01(rng);
    rows.push_back({inc, 2.0 * inc + 5.0, 20.0 + 40.0 * uniform01(rng)});
  }
  return toy::make({toy::numeric("Income"), toy::numeric("Mortgage"), toy::numeric("Age")}, rows,
                   [](const Instance& r) { return r[0] >= 60.0 ? 1 : 0; });
}

// Least-squares line y = a + b x fitted in closed form.
std::pair<double, double> line_fit(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  const double b = sxy / sxx;
  return {my - b * mx, b};
}

}  // namespace

TEST_CASE("double_f keeps a linearly linked pair on its fitted line") {
  const auto data = linked_pair();
  const auto ctx = build_context(data, toy::step_on(3, 0, 60.0));
  REQUIRE_FALSE(ctx->mi_pairs.empty());
  CHECK(ctx->mi_pairs[0].i == 0);
  CHECK(ctx->mi_pairs[0].j == 1);
  const auto [a, b] = line_fit(data.column(0), data.column(1));

  const Instance x{40.0, 85.0, 35.0};
  PerturbationMap p = bounds({{0, 40.0, 100.0}, {1, 85.0, 205.0}, {2, 35.0, 40.0}});
  const auto r = run_ufce(*ctx, x, p);
  const auto doubles = double_f(*ctx, x, r.subspace);
  REQUIRE_FALSE(doubles.empty());
  for (const auto& c : doubles) {
    CHECK(c.changed.size() <= 2);
    CHECK(c.valid);
    CHECK(c.plausible);
    CHECK(std::fabs(c.z[1] - (a + b * c.z[0])) <= 1e-6 * (1 + std::fabs(c.z[1])));
    for (const auto i : c.changed) {
      const Bound* s = r.subspace.find(i);
      REQUIRE(s != nullptr);
      CHECK(c.z[i] >= s->lower);
      CHECK(c.z[i] <= s->upper);
    }
  }
}

TEST_CASE("double_f skips protected pairs") {
  const auto base = linked_pair();
  auto data = base;
  data.schema[0].is_protected = true;
  data.schema[1].is_protected = true;
  const auto ctx = build_context(data, toy::step_on(3, 0, 60.0));
  const Instance x{40.0, 85.0, 35.0};
  const auto sub = subspace_of({{0, 60.0, 100.0}, {1, 125.0, 205.0}});
  CHECK(eligible_pairs(*ctx, sub).empty());
  CHECK(double_f(*ctx, x, sub).empty());
}

TEST_CASE("double_f flips two categoricals together") {
  Rng rng(8);
  std::vector<Instance> rows;
  for (int i = 0; i < 300; ++i) {
    const double c0 = uniform01(rng) < 0.5 ? 0.0 : 1.0;
    const double c1 = uniform01(rng) < 0.9 ? c0 : 1.0 - c0;
    rows.push_back({uniform01(rng), c0, c1});
  }
  const auto both = [](const Instance& r) { return r[1] == 1.0 && r[2] == 1.0 ? 1 : 0; };
  auto data = toy::make({toy::numeric("a"), toy::categorical("c0"), toy::categorical("c1")}, rows, both);
  auto f = std::make_shared<toy::FnClassifier>(3, [&](const Instance& r) { return both(r) ? 1.0 : 0.0; });
  const auto ctx = build_context(data, f);
  REQUIRE(ctx->mi_pairs[0].i == 1);
  REQUIRE(ctx->mi_pairs[0].j == 2);
  const Instance x{0.5, 0.0, 0.0};
  const auto out = double_f(*ctx, x, subspace_of({{1, 0.0, 1.0}, {2, 0.0, 1.0}}));
  REQUIRE(out.size() == 1);
  CHECK(out[0].z == Instance{0.5, 1.0, 1.0});
  CHECK(out[0].changed.size() == 2);
}

TEST_CASE("triple_f keeps both followers on their fitted relations") {
  Rng rng(21);
  std::vector<Instance> rows;
  for (int i = 0; i < 600; ++i) {
    const double inc = 100.0 * uniform01(rng);
    rows.push_back({inc, 2.0 * inc + 5.0 + 0.01 * standard_normal(rng), 0.1 * inc + 1.0 + 0.5 * standard_normal(rng),
                    20.0 + 40.0 * uniform01(rng)});
  }
  const auto data = toy::make({toy::numeric("Income"), toy::numeric("Mortgage"), toy::numeric("CCAvg"),
                               toy::numeric("Age")},
                              rows, [](const Instance& r) { return r[0] >= 60.0 ? 1 : 0; });
  const auto ctx = build_context(data, toy::step_on(4, 0, 60.0));
  const auto [am, bm] = line_fit(data.column(0), data.column(1));
  const auto [ac, bc] = line_fit(data.column(0), data.column(2));
  // CCAvg carries enough independent noise that the Mortgage fit can tell it
  // apart from Income; otherwise off-line extrapolation is ill-determined.

  const Instance x{40.0, 85.0, 5.0, 35.0};
  const auto p = bounds({{0, 40.0, 100.0}, {1, 85.0, 205.0}, {2, 5.0, 11.0}, {3, 35.0, 36.0}});
  const auto r = run_ufce(*ctx, x, p);
  const std::vector<std::size_t> users{0, 1, 2, 3};
  const auto triples = triple_f(*ctx, x, r.subspace, users);
  REQUIRE_FALSE(triples.empty());
  bool saw_full = false;
  for (const auto& c : triples) {
    CHECK(c.changed.size() <= 3);
    CHECK(c.valid);
    const bool links = std::find(c.changed.begin(), c.changed.end(), 1) != c.changed.end() &&
                       std::find(c.changed.begin(), c.changed.end(), 2) != c.changed.end() && c.z[0] != x[0];
    if (!links) continue;
    saw_full = true;
    CHECK(std::fabs(c.z[1] - (am + bm * c.z[0])) <= 0.05);
    CHECK(std::fabs(c.z[2] - (ac + bc * c.z[0])) <= 0.05);
  }
  CHECK(saw_full);
}

TEST_CASE("triple_f finds a candidate whenever the grid says one exists") {
  const auto data = linked_pair();
  ExplainConfig cfg;
  cfg.lof.threshold = 1e9;
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const double threshold = 60.0 + 30.0 * uniform01(rng);
    const auto ctx = build_context(data, toy::step_on(3, 0, threshold), cfg);
    const Instance x{30.0, 65.0, 30.0};
    const double hi = 60.0 + 40.0 * uniform01(rng);
    const auto sub = subspace_of({{0, 60.0, hi}, {1, 125.0, 205.0}, {2, 30.0, 40.0}});
    bool grid = false;
    for (int s = 0; s < 100; ++s) grid |= 60.0 + (hi - 60.0) * s / 99.0 >= threshold;
    const std::vector<std::size_t> users{0, 1, 2};
    const auto out = triple_f(*ctx, x, sub, users);
    if (grid) CHECK_FALSE(out.empty());
    for (const auto& c : out) CHECK(c.changed.size() <= 3);
  }
}

TEST_CASE("triple_f with every triplet protected returns nothing") {
  auto data = linked_pair();
  data.schema[2].is_protected = true;
  const auto ctx = build_context(data, toy::step_on(3, 0, 60.0));
  const std::vector<std::size_t> users{0, 1, 2};
  CHECK(triple_f(*ctx, Instance{30.0, 65.0, 30.0}, subspace_of({{0, 60.0, 100.0}, {1, 125.0, 205.0}, {2, 30.0, 40.0}}),
                 users)
            .empty());
}

TEST_CASE("run_ufce contract") {
  const auto data = income_toy();
  const auto ctx = build_context(data, toy::step_on(2, 0, 60.0));
  SUBCASE("instance already at the desired label") {
    CHECK_THROWS_AS((void)run_ufce(*ctx, Instance{70.0, 40.0}, bounds({{0, 70.0, 80.0}})), NothingToExplain);
  }
  SUBCASE("empty feedback") { CHECK(run_ufce(*ctx, Instance{50.0, 40.0}, PerturbationMap{}).candidates.empty()); }
  SUBCASE("decisive feature in p yields the single candidate") {
    const auto r = run_ufce(*ctx, Instance{50.0, 40.0}, bounds({{0, 50.0, 100.0}, {1, 40.0, 45.0}}));
    const auto single = std::count_if(r.candidates.begin(), r.candidates.end(),
                                      [](const CandidateCE& c) { return c.method == Method::single; });
    CHECK(single >= 1);
    CHECK(r.neighbor_count >= 5);
    for (const auto& c : r.candidates) {
      CHECK(c.valid);
      CHECK(c.plausible);
      CHECK(c.changed == changed_features(c.z, Instance{50.0, 40.0}));
    }
  }
  SUBCASE("invalid feedback is rejected") {
    CHECK_THROWS_AS((void)run_ufce(*ctx, Instance{50.0, 40.0}, bounds({{0, 60.0, 50.0}})), ArgumentError);
  }
}

TEST_CASE("build_context rejects an empty desired space") {
  auto data = income_toy();
  for (auto& y : data.labels) y = 0;
  CHECK_THROWS_AS((void)build_context(data, toy::step_on(2, 0, 60.0)), DesiredSpaceEmpty);
}

namespace {

using Key = std::tuple<double, std::size_t, int>;

// Exhaustive argmin over valid candidates; returns the set of tied winners.
std::vector<std::size_t> argmin_oracle(const Instance& x, const std::vector<CandidateCE>& cs, const Classifier& f,
                                       const DistanceModel& d) {
  std::optional<Key> best;
  std::vector<std::size_t> winners;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    if (f.predict(cs[i].z) != 1) continue;
    const Key k{d(cs[i].z, x), changed_features(cs[i].z, x).size(), static_cast<int>(cs[i].method)};
    if (!best || k < *best) {
      best = k;
      winners = {i};
    } else if (k == *best) {
      winners.push_back(i);
    }
  }
  return winners;
}

}  // namespace

TEST_CASE("select_best equals the exhaustive argmin and ignores order") {
  Rng rng(99);
  Schema s = two_numeric(1.0, 2.0);
  s.features.push_back(toy::categorical("c"));
  const DistanceModel d(s, 1.0);
  const toy::FnClassifier f(3, [](const Instance& z) { return z[0] + z[1] > 6.0 ? 1.0 : 0.0; });
  for (int trial = 0; trial < 50; ++trial) {
    const Instance x{uniform01(rng) * 3, uniform01(rng) * 3, 0.0};
    std::vector<CandidateCE> cs(1 + uniform_index(rng, 12));
    for (auto& c : cs) {
      // Coarse values so exact ties in delta actually occur.
      c.z = Instance{std::round(10 * uniform01(rng)), std::round(10 * uniform01(rng)), uniform01(rng) < 0.3 ? 1.0 : 0.0};
      if (uniform01(rng) < 0.3) c.z = cs.front().z;
      c.method = static_cast<Method>(uniform_index(rng, 3));
      c.changed = changed_features(c.z, x);
    }
    const auto winners = argmin_oracle(x, cs, f, d);
    const auto got = select_best(x, cs, 1, f, d);
    REQUIRE(got.has_value() == !winners.empty());
    if (!got) continue;
    const bool among = std::any_of(winners.begin(), winners.end(), [&](std::size_t i) {
      return cs[i].z == got->z && cs[i].method == got->method;
    });
    CHECK(among);
    for (int perm = 0; perm < 5; ++perm) {
      auto shuffled = cs;
      shuffle(shuffled, rng);
      const auto again = select_best(x, shuffled, 1, f, d);
      REQUIRE(again.has_value());
      CHECK(again->z == got->z);
      CHECK(again->method == got->method);
    }
  }
}

TEST_CASE("select_best examples") {
  Schema s = two_numeric(1.0, 1.0);
  const DistanceModel d(s, 1.0);
  const toy::FnClassifier f(2, [](const Instance&) { return 1.0; });
  const Instance x{0, 0};
  std::vector<CandidateCE> cs(3);
  cs[0].z = Instance{7, 0};
  cs[1].z = Instance{3, 0};
  cs[2].z = Instance{5, 0};
  CHECK(select_best(x, cs, 1, f, d)->z == Instance{3, 0});
  CHECK_FALSE(select_best(x, std::vector<CandidateCE>{}, 1, f, d).has_value());
  CHECK_FALSE(select_best(x, cs, 0, f, d).has_value());

  SUBCASE("ties prefer fewer changes, then the lower-arity method") {
    std::vector<CandidateCE> tie(3);
    tie[0].z = Instance{2, 2};
    tie[0].method = Method::single;
    tie[1].z = Instance{4, 0};
    tie[1].method = Method::triple;
    tie[2].z = Instance{4, 0};
    tie[2].method = Method::double_;
    const auto best = select_best(x, tie, 1, f, d);
    CHECK(best->z == Instance{4, 0});
    CHECK(best->method == Method::double_);
  }
}

#ifdef UFCE_DATA_DIR
TEST_CASE("bank candidates respect cardinality, protection and bounds") {
  const std::filesystem::path dir = UFCE_DATA_DIR;
  const auto data = load_dataset(dir / "bank.csv", SchemaConfig::from_file(dir / "bank.schema.json"));
  const auto folds = split_folds(data, 5, 0);
  auto model = std::make_shared<LogisticClassifier>(train_logistic(folds[0].train));
  ExplainConfig cfg;
  cfg.max_candidates_per_method = 5;
  const auto ctx = build_context(folds[0].train, model, cfg);
  const Schema& s = ctx->schema();
  std::size_t seen = 0, checked = 0;
  for (std::size_t r = 0; r < folds[0].test.size() && seen < 25; ++r) {
    const Instance& x = folds[0].test.rows[r];
    if (model->predict(x) == 1) continue;
    ++seen;
    PerturbationMap p;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i].is_categorical()) {
        p.set(i, x[i], s[i].alternate(x[i]));
      } else {
        p.set(i, x[i], x[i] + s[i].mad);
      }
    }
    const auto res = run_ufce(*ctx, x, p);
    for (const auto& c : res.candidates) {
      ++checked;
      const std::size_t limit = c.method == Method::single ? 1 : c.method == Method::double_ ? 2 : 3;
      CHECK(c.changed.size() <= limit);
      CHECK(c.changed == changed_features(c.z, x));
      CHECK(model->predict(c.z) == 1);
      CHECK(ctx->lof.is_plausible(c.z));
      const FeatureBounds& box = c.method == Method::single ? static_cast<const FeatureBounds&>(p) : res.subspace;
      for (const auto i : c.changed) {
        CHECK_FALSE(s[i].is_protected);
        const Bound* b = box.find(i);
        REQUIRE(b != nullptr);
        if (s[i].is_categorical()) {
          CHECK((c.z[i] == b->lower || c.z[i] == b->upper));
        } else {
          CHECK(c.z[i] >= b->lower);
          CHECK(c.z[i] <= b->upper);
        }
      }
    }
  }
  CHECK(checked > 0);
}
#endif
