#include "ufce/explainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <tuple>

#include "ufce/errors.hpp"
#include "ufce/random.hpp"

namespace ufce {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

CandidateCE make_candidate(const ExplainContext& ctx, Instance z, const Instance& x, Method m) {
  CandidateCE c;
  c.changed = changed_features(z, x);
  c.valid = ctx.model->predict(z) == ctx.config.t;
  c.plausible = ctx.lof.is_plausible(z);
  c.z = std::move(z);
  c.method = m;
  return c;
}

// Value the user allows for a categorical feature other than x_i, if any.
std::optional<double> flipped_code(const FeatureSchema& f, const Bound& b, double current) {
  const double alt = f.alternate(current);
  if (b.lower == alt || b.upper == alt) return alt;
  return std::nullopt;
}

// Keeps a predicted value inside the feature's subspace entry.
double fit_to_subspace(const FeatureSchema& f, const Bound& b, double predicted, double current) {
  if (f.is_categorical()) return predicted == b.lower || predicted == b.upper ? predicted : current;
  return std::clamp(predicted, b.lower, b.upper);
}

std::vector<CandidateCE> best_by_delta(const ExplainContext& ctx, const Instance& x, std::vector<CandidateCE> found,
                                       std::size_t limit) {
  std::vector<std::pair<double, std::size_t>> keyed;
  for (std::size_t i = 0; i < found.size(); ++i) keyed.push_back({ctx.distance(found[i].z, x), i});
  std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<CandidateCE> out;
  for (std::size_t i = 0; i < keyed.size() && out.size() < limit; ++i) out.push_back(std::move(found[keyed[i].second]));
  return out;
}

// Sorted uniform draws over [lo, hi], seeded per traversed feature.
std::vector<double> traverse_space(const ExplainContext& ctx, std::size_t feature, double lo, double hi,
                                   std::uint64_t stream) {
  Rng rng(derive_seed(ctx.config.seed, stream * 1000003ULL + feature));
  std::vector<double> ts(ctx.config.traverse_samples);
  for (auto& v : ts) v = lo + (hi - lo) * uniform01(rng);
  std::sort(ts.begin(), ts.end());
  return ts;
}

// Traverses `lead` by midpoint halving and fills each of `follow` from its
// predictor, in order, so later predictions see earlier ones.
std::optional<Instance> traverse(const ExplainContext& ctx, const Instance& x, const Subspace& subspace,
                                 std::size_t lead, std::span<const std::size_t> follow, std::uint64_t stream) {
  const Schema& schema = ctx.schema();
  const Bound* lb = subspace.find(lead);
  auto ts = traverse_space(ctx, lead, lb->lower, lb->upper, stream);
  while (!ts.empty()) {
    const std::size_t mid = ts.size() / 2;
    Instance z = x;
    z[lead] = ts[mid];
    for (const auto j : follow) {
      const double predicted = ctx.predictors[j].predict_from(z);
      z[j] = fit_to_subspace(schema[j], *subspace.find(j), predicted, x[j]);
    }
    if (ctx.accepts(z)) return z;
    ts.erase(ts.begin(), ts.begin() + static_cast<std::ptrdiff_t>(mid + 1));
  }
  return std::nullopt;
}

// Every feature categorical: flip each to its allowed alternate.
std::optional<Instance> flip_all(const ExplainContext& ctx, const Instance& x, const Subspace& subspace,
                                 std::span<const std::size_t> features) {
  Instance z = x;
  for (const auto i : features) {
    const auto code = flipped_code(ctx.schema()[i], *subspace.find(i), x[i]);
    if (!code) return std::nullopt;
    z[i] = *code;
  }
  if (ctx.accepts(z)) return z;
  return std::nullopt;
}

std::optional<Instance> perturb_group(const ExplainContext& ctx, const Instance& x, const Subspace& subspace,
                                      std::vector<std::size_t> group, std::uint64_t stream) {
  const Schema& schema = ctx.schema();
  const auto lead = std::find_if(group.begin(), group.end(), [&](std::size_t i) { return schema[i].is_numeric(); });
  if (lead == group.end()) return flip_all(ctx, x, subspace, group);
  const std::size_t first = *lead;
  group.erase(lead);
  return traverse(ctx, x, subspace, first, group, stream);
}

bool usable(const ExplainContext& ctx, const Subspace& subspace, std::size_t i) {
  return subspace.contains(i) && !ctx.schema()[i].is_protected;
}

}  // namespace

std::string_view method_name(Method m) noexcept {
  switch (m) {
    case Method::single: return "single";
    case Method::double_: return "double";
    case Method::triple: return "triple";
  }
  return "";
}

std::string_view method_label(Method m) noexcept {
  switch (m) {
    case Method::single: return "UFCE1";
    case Method::double_: return "UFCE2";
    case Method::triple: return "UFCE3";
  }
  return "";
}

std::optional<Method> parse_method(std::string_view s) noexcept {
  for (const Method m : {Method::single, Method::double_, Method::triple}) {
    if (s == method_name(m) || s == method_label(m)) return m;
  }
  return std::nullopt;
}

std::vector<std::size_t> changed_features(const Instance& z, const Instance& x) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < z.size() && i < x.size(); ++i) {
    if (z[i] != x[i]) out.push_back(i);
  }
  return out;
}

void ExplainConfig::validate() const {
  if (t != 0 && t != 1) throw ArgumentError("desired label must be 0 or 1");
  if (!(lambda >= 0.0)) throw ArgumentError("lambda must be non-negative");
  if (steps_per_feature < 2) throw ArgumentError("steps_per_feature must be at least 2");
  if (traverse_samples < 1) throw ArgumentError("traverse_samples must be positive");
  if (!(radius.fraction > 0.0)) throw ArgumentError("radius fraction must be positive");
  if (lof.k < 1) throw ArgumentError("LOF k must be positive");
  if (!(lof.threshold > 0.0)) throw ArgumentError("LOF threshold must be positive");
  if (max_candidates_per_method < 1) throw ArgumentError("max_candidates_per_method must be positive");
}

DistanceModel::DistanceModel(const Schema& schema, double lambda) : lambda_(lambda) {
  double bound = 0.0;
  for (const auto& f : schema.features) {
    categorical_.push_back(f.is_categorical());
    if (f.is_categorical()) {
      ++categorical_count_;
      weight_.push_back(0.0);
      continue;
    }
    if (f.mad > 0.0) {
      weight_.push_back(1.0 / f.mad);
      bound += (f.observed_max - f.observed_min) / f.mad;
    } else {
      weight_.push_back(1.0 / kMadFloor);
      warnings_.push_back("feature '" + f.name + "' has zero MAD; its distance term uses a 1e-9 denominator");
    }
  }
  bound_ = bound > 0.0 ? bound : 1.0;
}

DeltaTerms DistanceModel::terms(const Instance& z, const Instance& x) const {
  if (z.size() != categorical_.size() || x.size() != categorical_.size()) {
    throw ArgumentError("delta: instance does not match schema dimension");
  }
  DeltaTerms t;
  std::size_t mismatched = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (categorical_[i]) {
      mismatched += z[i] != x[i];
    } else {
      t.euclid += std::fabs(z[i] - x[i]) * weight_[i];
    }
  }
  t.jaccard = categorical_count_ > 0 ? static_cast<double>(mismatched) / static_cast<double>(categorical_count_) : 0.0;
  t.euclid_normalized = t.euclid / bound_;
  t.total = t.jaccard + lambda_ * t.euclid_normalized;
  return t;
}

double delta(const Instance& z, const Instance& x, double lambda, const Schema& schema) {
  return DistanceModel(schema, lambda)(z, x);
}

std::shared_ptr<const ExplainContext> build_context(Dataset train, std::shared_ptr<const Classifier> model,
                                                    const ExplainConfig& config) {
  config.validate();
  if (!model) throw ArgumentError("build_context needs a classifier");
  if (model->dimension() != train.dimension()) throw ArgumentError("classifier does not match the dataset schema");
  const auto start = Clock::now();
  auto ctx = std::make_shared<ExplainContext>();
  ctx->desired = desired_space(train, config.t);
  ctx->model = std::move(model);
  ctx->config = config;
  ctx->metric = Embedding(train.schema, fit_scaler(train));
  LofConfig lof = config.lof;
  if (ctx->desired.size() <= lof.k) {
    if (ctx->desired.size() < 2) throw ArgumentError("desired space needs at least two rows");
    lof.k = ctx->desired.size() - 1;
  }
  ctx->lof = fit_lof(ctx->desired, ctx->metric, lof);
  ctx->predictors.reserve(train.dimension());
  for (std::size_t i = 0; i < train.dimension(); ++i) ctx->predictors.push_back(train_feature_predictor(train, i));
  ctx->mi_pairs = rank_pairs(train, config.mi_neighbors);
  ctx->distance = DistanceModel(train.schema, config.lambda);
  ctx->train = std::move(train);
  ctx->setup_seconds = seconds_since(start);
  return ctx;
}

std::vector<CandidateCE> single_f(const ExplainContext& ctx, const Instance& x, const PerturbationMap& p) {
  const Schema& schema = ctx.schema();
  std::vector<CandidateCE> found;
  for (const auto& b : p.entries) {
    const std::size_t i = b.feature;
    const auto& f = schema[i];
    if (f.is_protected) continue;
    if (f.is_categorical()) {
      const auto code = flipped_code(f, b, x[i]);
      if (!code) continue;
      Instance z = x;
      z[i] = *code;
      if (ctx.accepts(z)) found.push_back(make_candidate(ctx, std::move(z), x, Method::single));
      continue;
    }
    if (b.lower == b.upper && b.lower == x[i]) continue;

    const double step = (b.upper - b.lower) / static_cast<double>(ctx.config.steps_per_feature);
    std::optional<double> best;
    auto consider = [&](double v) {
      if (v == x[i]) return false;
      Instance z = x;
      z[i] = v;
      if (!ctx.accepts(z)) return false;
      if (!best || std::fabs(v - x[i]) <= std::fabs(*best - x[i])) best = v;
      return true;
    };
    double start = b.lower, end = b.upper;
    while (start <= end) {
      const double mid = start + (end - start) / 2.0;
      if (consider(mid)) {
        end = mid - step;
      } else {
        start = mid + step;
      }
      if (step == 0.0) break;
    }
    if (!best && ctx.config.linear_fallback && step > 0.0) {
      for (std::size_t s = 0; s <= ctx.config.steps_per_feature; ++s) {
        const double v = s == ctx.config.steps_per_feature ? b.upper : b.lower + step * static_cast<double>(s);
        consider(v);
      }
    }
    if (best) {
      Instance z = x;
      z[i] = *best;
      found.push_back(make_candidate(ctx, std::move(z), x, Method::single));
    }
  }
  return best_by_delta(ctx, x, std::move(found), ctx.config.max_candidates_per_method);
}

std::vector<MIPair> eligible_pairs(const ExplainContext& ctx, const Subspace& subspace) {
  std::vector<MIPair> out;
  for (const auto& pair : ctx.mi_pairs) {
    if (out.size() >= ctx.config.top_m) break;
    if (usable(ctx, subspace, pair.i) && usable(ctx, subspace, pair.j)) out.push_back(pair);
  }
  return out;
}

std::vector<CandidateCE> double_f(const ExplainContext& ctx, const Instance& x, const Subspace& subspace) {
  std::vector<CandidateCE> out;
  const auto pairs = eligible_pairs(ctx, subspace);
  for (std::size_t n = 0; n < pairs.size() && out.size() < ctx.config.max_candidates_per_method; ++n) {
    if (auto z = perturb_group(ctx, x, subspace, {pairs[n].i, pairs[n].j}, n)) {
      out.push_back(make_candidate(ctx, std::move(*z), x, Method::double_));
    }
  }
  return out;
}

std::vector<CandidateCE> triple_f(const ExplainContext& ctx, const Instance& x, const Subspace& subspace,
                                  std::span<const std::size_t> user_features) {
  std::vector<CandidateCE> out;
  const auto pairs = eligible_pairs(ctx, subspace);
  const auto triplets = form_triplets(pairs, user_features, pairs.size());
  for (std::size_t n = 0; n < triplets.size() && out.size() < ctx.config.max_candidates_per_method; ++n) {
    const auto& t = triplets[n];
    if (!usable(ctx, subspace, t.k)) continue;
    if (auto z = perturb_group(ctx, x, subspace, {t.i, t.j, t.k}, 1000 + n)) {
      out.push_back(make_candidate(ctx, std::move(*z), x, Method::triple));
    }
  }
  return out;
}

ExplainResult run_ufce(const ExplainContext& ctx, const Instance& x, const PerturbationMap& p) {
  if (x.size() != ctx.schema().size()) throw ArgumentError("instance does not match schema dimension");
  if (ctx.model->predict(x) == ctx.config.t) {
    throw NothingToExplain("instance is already classified as " + std::to_string(ctx.config.t));
  }
  p.validate(ctx.schema());
  ExplainResult r;
  if (p.empty()) return r;

  auto start = Clock::now();
  const auto nb = fnn(ctx.tree(), x, ctx.config.radius);
  r.radius = nb.radius;
  r.neighbor_count = nb.neighbors.size();
  std::vector<Instance> nn;
  nn.reserve(nb.neighbors.size());
  for (const auto& n : nb.neighbors) nn.push_back(ctx.desired.rows[n.index]);
  if (!nn.empty()) {
    r.subspace = intervals(nn, p, ctx.schema(), ctx.config.strict_intersection);
  } else {
    r.warnings.push_back("no desired-space neighbors within the search radius");
  }
  r.warnings.insert(r.warnings.end(), r.subspace.warnings.begin(), r.subspace.warnings.end());
  r.timing.neighborhood = seconds_since(start);

  start = Clock::now();
  auto singles = single_f(ctx, x, p);
  r.timing.single = seconds_since(start);

  start = Clock::now();
  auto doubles = double_f(ctx, x, r.subspace);
  r.timing.double_ = seconds_since(start);

  start = Clock::now();
  const auto users = p.features();
  auto triples = triple_f(ctx, x, r.subspace, users);
  r.timing.triple = seconds_since(start);

  for (auto* group : {&singles, &doubles, &triples}) {
    for (auto& c : *group) r.candidates.push_back(std::move(c));
  }
  for (const auto i : ctx.schema().numeric_indices()) {
    if (ctx.schema()[i].mad > 0.0) continue;
    const bool touched = std::any_of(r.candidates.begin(), r.candidates.end(), [&](const CandidateCE& c) {
      return std::find(c.changed.begin(), c.changed.end(), i) != c.changed.end();
    });
    if (touched) {
      r.warnings.push_back("feature '" + ctx.schema()[i].name + "' has zero MAD; its distance term uses a 1e-9 denominator");
    }
  }
  return r;
}

std::vector<CandidateCE> rank_candidates(const Instance& x, std::span<const CandidateCE> candidates, int t,
                                         const Classifier& f, const DistanceModel& distance) {
  using Key = std::tuple<double, std::size_t, int>;
  std::vector<std::pair<Key, std::size_t>> keyed;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (f.predict(c.z) != t) continue;
    keyed.push_back({{distance(c.z, x), changed_features(c.z, x).size(), static_cast<int>(c.method)}, i});
  }
  // Identical keys fall back to comparing the instances so order never matters.
  std::stable_sort(keyed.begin(), keyed.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return candidates[a.second].z.values < candidates[b.second].z.values;
  });
  std::vector<CandidateCE> out;
  out.reserve(keyed.size());
  for (const auto& [key, i] : keyed) out.push_back(candidates[i]);
  return out;
}

std::optional<CandidateCE> select_best(const Instance& x, std::span<const CandidateCE> candidates, int t,
                                       const Classifier& f, const DistanceModel& distance) {
  auto ranked = rank_candidates(x, candidates, t, f, distance);
  if (ranked.empty()) return std::nullopt;
  return std::move(ranked.front());
}

}  // namespace ufce
