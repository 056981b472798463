#include <cmath>
#include <set>

#include "doctest.h"
#include "ufce/errors.hpp"
#include "ufce/mi.hpp"
#include "ufce/random.hpp"

using namespace ufce;

namespace {

struct Columns {
  std::vector<double> x, y;
};

Columns gaussian(double rho, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Columns c;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = standard_normal(rng), b = standard_normal(rng);
    c.x.push_back(a);
    c.y.push_back(rho * a + std::sqrt(1 - rho * rho) * b);
  }
  return c;
}

double gaussian_mi(double rho) { return -0.5 * std::log(1 - rho * rho); }

}  // namespace

TEST_CASE("KSG matches the Gaussian closed form") {
  for (const double rho : {0.0, 0.5, 0.9}) {
    const auto c = gaussian(rho, 5000, 42);
    CAPTURE(rho);
    CHECK(std::fabs(ksg_mi(c.x, c.y) - gaussian_mi(rho)) <= 0.05);
  }
  CHECK(gaussian_mi(0.9) == doctest::Approx(0.8304).epsilon(1e-3));
}

TEST_CASE("independent uniforms have near-zero MI") {
  Rng rng(3);
  std::vector<double> a(5000), b(5000);
  for (auto& v : a) v = uniform01(rng);
  for (auto& v : b) v = uniform01(rng);
  CHECK(estimate_mi(a, b) < 0.05);
}

TEST_CASE("constant column and argument errors") {
  const std::vector<double> c(50, 1.0);
  const auto g = gaussian(0.5, 50, 1);
  CHECK(estimate_mi(c, g.y) == 0.0);
  CHECK(estimate_mi(g.x, c) == 0.0);
  const std::vector<double> three{1, 2, 3};
  CHECK_THROWS_AS(estimate_mi(three, three, 3), ArgumentError);
  CHECK_THROWS_AS(estimate_mi(three, std::vector<double>{1, 2}, 1), ArgumentError);
}

TEST_CASE("KSG is symmetric") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto c = gaussian(0.3 + 0.05 * static_cast<double>(s), 400, s);
    CHECK(std::fabs(ksg_mi(c.x, c.y) - ksg_mi(c.y, c.x)) < 1e-9);
  }
}

TEST_CASE("MI of x with itself dominates MI with a noisy copy") {
  int passes = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng rng(500 + s);
    std::vector<double> x(500), noisy(500);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = standard_normal(rng);
      noisy[i] = x[i] + standard_normal(rng);
    }
    passes += ksg_mi(x, x) >= ksg_mi(x, noisy);
  }
  CHECK(passes >= 19);
}

TEST_CASE("discrete and mixed estimators") {
  std::vector<double> a, b;
  for (int i = 0; i < 1000; ++i) {
    a.push_back(i % 2);
    b.push_back(i % 2);
  }
  CHECK(discrete_mi(a, b) == doctest::Approx(std::log(2.0)));
  std::vector<double> shifted(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) shifted[i] = static_cast<double>((i / 2) % 2);
  CHECK(discrete_mi(a, shifted) == doctest::Approx(0.0).epsilon(1e-12));

  // Continuous x that separates the two classes perfectly carries ln 2 nats.
  Rng rng(6);
  std::vector<double> x, c;
  for (int i = 0; i < 2000; ++i) {
    const int cls = i % 2;
    c.push_back(cls);
    x.push_back(cls * 10.0 + uniform01(rng));
  }
  CHECK(estimate_mi(x, c, 3, FeatureKind::numeric, FeatureKind::categorical) == doctest::Approx(std::log(2.0)).epsilon(0.05));
  CHECK(estimate_mi(c, x, 3, FeatureKind::categorical, FeatureKind::numeric) ==
        estimate_mi(x, c, 3, FeatureKind::numeric, FeatureKind::categorical));
  std::vector<double> noise(2000);
  for (auto& v : noise) v = uniform01(rng);
  CHECK(mixed_mi(noise, c) < 0.05);
}

TEST_CASE("rank_pairs orders and deduplicates") {
  Rng rng(8);
  Dataset ds;
  ds.schema.features = {FeatureSchema{.name = "f0"}, FeatureSchema{.name = "f1"}, FeatureSchema{.name = "f2"}};
  for (int i = 0; i < 600; ++i) {
    const double v = standard_normal(rng);
    ds.rows.push_back({v, v, standard_normal(rng)});
    ds.labels.push_back(i % 2);
  }
  refit_statistics(ds.schema, ds.rows);
  const auto pairs = rank_pairs(ds);
  REQUIRE(pairs.size() == 3);
  CHECK(pairs[0].i == 0);
  CHECK(pairs[0].j == 1);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    CHECK(pairs[p].score >= 0.0);
    CHECK(pairs[p].i < pairs[p].j);
    CHECK(seen.insert({pairs[p].i, pairs[p].j}).second);
    if (p > 0) CHECK(pairs[p - 1].score >= pairs[p].score);
  }
  CHECK(rank_pairs(ds) == pairs);
  const std::vector<std::size_t> one{0};
  CHECK_THROWS_AS(rank_pairs(ds, one), ArgumentError);
}

TEST_CASE("rank_pairs breaks ties lexicographically") {
  Dataset ds;
  for (const char* n : {"a", "b", "c", "d"}) ds.schema.features.push_back(FeatureSchema{.name = n});
  for (int i = 0; i < 20; ++i) {
    ds.rows.push_back({1, 2, 3, 4});
    ds.labels.push_back(i % 2);
  }
  const auto pairs = rank_pairs(ds);
  REQUIRE(pairs.size() == 6);
  const std::vector<std::pair<std::size_t, std::size_t>> expected{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  for (std::size_t p = 0; p < 6; ++p) CHECK(std::make_pair(pairs[p].i, pairs[p].j) == expected[p]);
}

TEST_CASE("form_triplets enumeration") {
  const std::size_t A = 0, B = 1, C = 2, D = 3, E = 4;
  const std::vector<MIPair> ab{{A, B, 0.9}};
  CHECK(form_triplets(ab, std::vector<std::size_t>{A, B}, 1).empty());
  CHECK(form_triplets(ab, std::vector<std::size_t>{D, C}, 1) == std::vector<Triplet>{{A, B, C}, {A, B, D}});
  const std::vector<MIPair> two{{A, B, 0.9}, {C, D, 0.5}};
  CHECK(form_triplets(two, std::vector<std::size_t>{E}, 2) == std::vector<Triplet>{{A, B, E}, {C, D, E}});
  CHECK_THROWS_AS(form_triplets(two, std::vector<std::size_t>{E}, 3), ArgumentError);

  std::vector<MIPair> many;
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = i + 1; j < 6; ++j) many.push_back({i, j, 0.1});
  const std::vector<std::size_t> users{0, 1, 2, 3, 4, 5};
  for (const auto& t : form_triplets(many, users, many.size())) {
    CHECK(t.i != t.j);
    CHECK(t.i != t.k);
    CHECK(t.j != t.k);
  }
}
