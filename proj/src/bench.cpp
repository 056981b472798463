#include "ufce/bench.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ufce/errors.hpp"
#include "ufce/random.hpp"

namespace ufce {

namespace {

constexpr std::array<Method, 3> kMethods{Method::single, Method::double_, Method::triple};

std::vector<std::size_t> all_features(const Schema& schema, std::span<const std::size_t> features) {
  if (!features.empty()) return {features.begin(), features.end()};
  std::vector<std::size_t> out(schema.size());
  std::iota(out.begin(), out.end(), 0);
  return out;
}

struct Cell {
  double pool = 0, attempted = 0, generated = 0;
  double plausible = 0, actionable = 0, feasible = 0;
  std::vector<MetricsRecord> chosen;
  double seconds = 0.0;
  std::size_t timed = 0;
};

// Cells keyed by condition in first-seen order.
class Tally {
 public:
  Cell& at(const std::string& condition, Method m) {
    auto it = std::find(conditions_.begin(), conditions_.end(), condition);
    if (it == conditions_.end()) {
      conditions_.push_back(condition);
      cells_.emplace_back();
      it = conditions_.end() - 1;
    }
    return cells_[static_cast<std::size_t>(it - conditions_.begin())][static_cast<std::size_t>(m)];
  }

  void add_pool(const std::string& condition, std::size_t n) {
    for (const Method m : kMethods) at(condition, m).pool += static_cast<double>(n);
  }

  void write(ExperimentReport& report, double divisor = 1.0) const {
    for (std::size_t c = 0; c < conditions_.size(); ++c) {
      for (const Method m : kMethods) {
        const Cell& cell = cells_[c][static_cast<std::size_t>(m)];
        ReportRow row;
        row.condition = conditions_[c];
        row.method = std::string(method_label(m));
        row.pool = cell.pool / divisor;
        row.attempted = cell.attempted / divisor;
        row.generated = cell.generated / divisor;
        row.plausible = cell.plausible / divisor;
        row.actionable = cell.actionable / divisor;
        row.feasible = cell.feasible / divisor;
        row.feasible_pct = cell.pool > 0 ? cell.feasible / cell.pool * 100.0 : 0.0;
        const auto agg = aggregate(cell.chosen);
        row.prox_jac = agg.prox_jac;
        row.prox_euc = agg.prox_euc;
        row.sparsity = agg.sparsity;
        row.actionability = agg.actionability;
        report.rows.push_back(row);
        const auto made = static_cast<std::size_t>(cell.generated);
        report.timing.push_back({row.condition, row.method, cell.timed, made, cell.seconds,
                                 made > 0 ? cell.seconds / static_cast<double>(made) : 0.0});
      }
    }
  }

 private:
  std::vector<std::string> conditions_;
  std::vector<std::array<Cell, 3>> cells_;
};

struct Split {
  Dataset train, test;
  std::shared_ptr<const ExplainContext> ctx;
  std::vector<std::size_t> pool;
};

Split prepare_split(const Dataset& data, std::size_t fold, const BenchConfig& config, std::uint64_t seed) {
  auto folds = split_folds(data, config.folds, seed);
  Split s;
  s.train = std::move(folds[fold].train);
  s.test = std::move(folds[fold].test);
  auto model = std::make_shared<LogisticClassifier>(train_logistic(s.train, config.model));
  ExplainConfig ec = config.explain;
  ec.max_candidates_per_method = config.candidates_per_method;
  ec.seed = seed;
  s.ctx = build_context(s.train, model, ec);
  s.pool = draw_pool(s.test, *model, ec.t, config.pool_size, derive_seed(seed, 1 + fold));
  return s;
}

// Independent re-check of a tallied feasible candidate.
bool reverify(const ExplainContext& ctx, const Instance& x, const Instance& z, std::span<const std::size_t> users,
              double threshold) {
  const bool valid = ctx.model->predict(z) == ctx.config.t;
  const bool plausible = ctx.lof.score(z) <= ctx.lof.threshold();
  std::size_t changed = 0, inside = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const bool differs = ctx.schema()[i].is_categorical() ? z[i] != x[i] : std::fabs(z[i] - x[i]) > kNumericChangeTolerance;
    if (!differs) continue;
    ++changed;
    inside += std::find(users.begin(), users.end(), i) != users.end();
  }
  const double act = changed > 0 ? static_cast<double>(inside) / static_cast<double>(changed) : 0.0;
  return valid && plausible && act >= threshold;
}

void explain_instance(const ExplainContext& ctx, const Instance& x, const PerturbationMap& p,
                      const std::string& condition, std::size_t dataset, std::size_t fold, const BenchConfig& config,
                      Tally& tally, Tally* mean_tally, ExperimentReport& report) {
  ExplainResult result;
  try {
    result = run_ufce(ctx, x, p);
  } catch (const NothingToExplain&) {
    ++report.notes["already_desired"];
    return;
  } catch (const Error& e) {
    ++report.notes["explain_error"];
    return;
  }
  const auto users = p.features();
  for (const Method m : kMethods) {
    std::vector<const CandidateCE*> mine;
    for (const auto& c : result.candidates) {
      if (c.method == m) mine.push_back(&c);
    }
    double seconds = result.timing.single;
    if (m == Method::double_) seconds = result.timing.neighborhood + result.timing.double_;
    if (m == Method::triple) seconds = result.timing.neighborhood + result.timing.triple;

    // Nearest feasible candidate, else nearest generated.
    const CandidateCE* chosen = nullptr;
    MetricsRecord chosen_record;
    double chosen_delta = INFINITY;
    bool chosen_feasible = false;
    for (const auto* c : mine) {
      const auto rec = evaluate(c->z, x, ctx.schema(), users, c->valid, c->plausible, config.actionability_threshold);
      const double d = ctx.distance(c->z, x);
      const bool better = (rec.feasible && !chosen_feasible) || (rec.feasible == chosen_feasible && d < chosen_delta);
      if (!chosen || better) {
        chosen = c;
        chosen_record = rec;
        chosen_delta = d;
        chosen_feasible = rec.feasible;
      }
      report.emitted.push_back({condition, m, dataset, fold, x, *c, p, result.subspace});
    }
    for (Tally* t : {&tally, mean_tally}) {
      if (!t) continue;
      Cell& cell = t->at(t == &tally ? condition : std::string("mean"), m);
      cell.attempted += 1;
      cell.seconds += seconds;
      ++cell.timed;
      if (!chosen) continue;
      cell.generated += 1;
      cell.plausible += chosen_record.plausible;
      cell.actionable += chosen_record.actionability_fraction >= config.actionability_threshold;
      cell.feasible += chosen_record.feasible;
      cell.chosen.push_back(chosen_record);
    }
    if (chosen && chosen_record.feasible &&
        !reverify(ctx, x, chosen->z, users, config.actionability_threshold)) {
      ++report.verification_failures;
    }
    if (!chosen) ++report.notes[std::string("no_candidate_") + std::string(method_name(m))];
  }
}

ExperimentReport start_report(std::string experiment, const BenchConfig& config) {
  ExperimentReport r;
  r.experiment = std::move(experiment);
  r.seed = config.seed;
  r.config = config.to_json();
  return r;
}

}  // namespace

double feedback_fraction(FeedbackLevel level) noexcept {
  switch (level) {
    case FeedbackLevel::VL: return 0.2;
    case FeedbackLevel::L: return 0.4;
    case FeedbackLevel::M: return 0.6;
    case FeedbackLevel::F: return 0.8;
    case FeedbackLevel::MF: return 1.0;
  }
  return 0.0;
}

std::string_view level_name(FeedbackLevel level) noexcept {
  switch (level) {
    case FeedbackLevel::VL: return "VL";
    case FeedbackLevel::L: return "L";
    case FeedbackLevel::M: return "M";
    case FeedbackLevel::F: return "F";
    case FeedbackLevel::MF: return "MF";
  }
  return "";
}

PerturbationMap make_feedback(double fraction, const Instance& x, const Schema& schema,
                              std::span<const std::size_t> features) {
  if (x.size() != schema.size()) throw ArgumentError("instance does not match schema dimension");
  PerturbationMap p;
  for (const auto i : all_features(schema, features)) {
    const auto& f = schema[i];
    if (f.is_categorical()) {
      p.set(i, x[i], f.alternate(x[i]));
    } else {
      p.set(i, x[i], x[i] + fraction * f.mad);
    }
  }
  return p;
}

PerturbationMap make_feedback(FeedbackLevel level, const Instance& x, const Schema& schema,
                              std::span<const std::size_t> features) {
  return make_feedback(feedback_fraction(level), x, schema, features);
}

PerturbationMap random_feedback(const Instance& x, const Schema& schema, std::uint64_t seed,
                                std::span<const std::size_t> features) {
  if (x.size() != schema.size()) throw ArgumentError("instance does not match schema dimension");
  Rng rng(seed);
  PerturbationMap p;
  for (const auto i : all_features(schema, features)) {
    const auto& f = schema[i];
    const double u = uniform_open_closed(rng);
    if (f.is_categorical()) {
      p.set(i, x[i], f.alternate(x[i]));
    } else {
      const double room = f.observed_max - x[i];
      p.set(i, x[i], room > 0.0 ? x[i] + u * room : x[i]);
    }
  }
  return p;
}

nlohmann::ordered_json BenchConfig::to_json() const {
  nlohmann::ordered_json j;
  j["pool_size"] = pool_size;
  j["seed"] = seed;
  j["folds"] = folds;
  j["repetitions"] = repetitions;
  j["candidates_per_method"] = candidates_per_method;
  j["actionability_threshold"] = actionability_threshold;
  j["rq3_fraction"] = rq3_fraction;
  j["explain"] = {{"t", explain.t},
                  {"lambda", explain.lambda},
                  {"steps_per_feature", explain.steps_per_feature},
                  {"traverse_samples", explain.traverse_samples},
                  {"radius_fraction", explain.radius.fraction},
                  {"radius_min_neighbors", explain.radius.min_neighbors},
                  {"radius_max_doublings", explain.radius.max_doublings},
                  {"strict_intersection", explain.strict_intersection},
                  {"top_m", explain.top_m},
                  {"mi_neighbors", explain.mi_neighbors},
                  {"lof_k", explain.lof.k},
                  {"lof_threshold", explain.lof.threshold},
                  {"linear_fallback", explain.linear_fallback}};
  j["model"] = {{"solver", model.solver == LogisticSolver::newton ? "newton" : "gradient_descent"},
                {"learning_rate", model.learning_rate},
                {"epochs", model.epochs},
                {"l2", model.l2},
                {"tolerance", model.tolerance}};
  return j;
}

const ReportRow* ExperimentReport::find(std::string_view condition, std::string_view method) const {
  for (const auto& r : rows) {
    if (r.condition == condition && r.method == method) return &r;
  }
  return nullptr;
}

std::vector<std::size_t> draw_pool(const Dataset& test, const Classifier& f, int t, std::size_t pool_size,
                                   std::uint64_t seed) {
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (f.predict(test.rows[i]) != t) candidates.push_back(i);
  }
  Rng rng(seed);
  shuffle(candidates, rng);
  if (candidates.size() > pool_size) candidates.resize(pool_size);
  return candidates;
}

ExperimentReport run_rq1(const NamedDataset& dataset, const BenchConfig& config) {
  auto report = start_report("rq1", config);
  report.datasets = {dataset.name};
  const auto split = prepare_split(dataset.data, 0, config, config.seed);
  report.setup_seconds = split.ctx->setup_seconds;
  if (split.pool.empty()) ++report.notes["empty_pool"];
  Tally tally;
  for (const auto level : kFeedbackLevels) {
    const std::string cond(level_name(level));
    tally.add_pool(cond, split.pool.size());
    for (const auto idx : split.pool) {
      const auto& x = split.test.rows[idx];
      explain_instance(*split.ctx, x, make_feedback(level, x, split.ctx->schema()), cond, 0, 0, config, tally, nullptr,
                       report);
    }
  }
  tally.write(report);
  return report;
}

ExperimentReport run_rq2(const NamedDataset& dataset, const BenchConfig& config) {
  auto report = start_report("rq2", config);
  report.datasets = {dataset.name};
  const auto split = prepare_split(dataset.data, 0, config, config.seed);
  report.setup_seconds = split.ctx->setup_seconds;
  if (split.pool.empty()) ++report.notes["empty_pool"];
  Tally tally, mean;
  for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
    const std::string cond = "rep" + std::to_string(rep + 1);
    tally.add_pool(cond, split.pool.size());
    mean.add_pool("mean", split.pool.size());
    for (std::size_t n = 0; n < split.pool.size(); ++n) {
      const auto& x = split.test.rows[split.pool[n]];
      const auto p = random_feedback(x, split.ctx->schema(), derive_seed(config.seed, 100000 + rep * 10007 + n));
      explain_instance(*split.ctx, x, p, cond, 0, 0, config, tally, &mean, report);
    }
  }
  tally.write(report);
  ExperimentReport averaged;
  mean.write(averaged, static_cast<double>(std::max<std::size_t>(config.repetitions, 1)));
  report.rows.insert(report.rows.end(), averaged.rows.begin(), averaged.rows.end());
  report.timing.insert(report.timing.end(), averaged.timing.begin(), averaged.timing.end());
  return report;
}

ExperimentReport run_rq3(std::span<const NamedDataset> datasets, const BenchConfig& config) {
  auto report = start_report("rq3", config);
  Tally tally;
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    const auto& ds = datasets[d];
    report.datasets.push_back(ds.name);
    for (std::size_t fold = 0; fold < config.folds; ++fold) {
      const auto split = prepare_split(ds.data, fold, config, derive_seed(config.seed, d));
      report.setup_seconds += split.ctx->setup_seconds;
      if (split.pool.empty()) ++report.notes["empty_pool"];
      tally.add_pool(ds.name, split.pool.size());
      for (const auto idx : split.pool) {
        const auto& x = split.test.rows[idx];
        explain_instance(*split.ctx, x, make_feedback(config.rq3_fraction, x, split.ctx->schema()), ds.name, d, fold,
                         config, tally, nullptr, report);
      }
    }
  }
  tally.write(report);
  return report;
}

const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols{
      "condition",         "method",         "pool",          "attempted",         "generated",
      "plausible",         "actionable",     "feasible",      "feasible_pct",      "prox_jac_mean",
      "prox_jac_std",      "prox_euc_mean",  "prox_euc_std",  "sparsity_mean",     "sparsity_std",
      "actionability_mean", "actionability_std", "n_generated"};
  return cols;
}

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

nlohmann::ordered_json summary_json(const MetricSummary& s) {
  return {{"mean", s.mean}, {"std", s.stddev}, {"n", s.count}};
}

MetricSummary summary_from(const nlohmann::json& j) {
  return {j.at("n").get<std::size_t>(), j.at("mean").get<double>(), j.at("std").get<double>()};
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string emit_report(const ExperimentReport& report, ReportFormat format) {
  if (format == ReportFormat::json) {
    nlohmann::ordered_json j;
    j["experiment"] = report.experiment;
    j["datasets"] = report.datasets;
    j["seed"] = report.seed;
    j["config"] = report.config;
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : report.rows) {
      j["rows"].push_back({{"condition", r.condition},
                           {"method", r.method},
                           {"pool", r.pool},
                           {"attempted", r.attempted},
                           {"generated", r.generated},
                           {"plausible", r.plausible},
                           {"actionable", r.actionable},
                           {"feasible", r.feasible},
                           {"feasible_pct", r.feasible_pct},
                           {"prox_jac", summary_json(r.prox_jac)},
                           {"prox_euc", summary_json(r.prox_euc)},
                           {"sparsity", summary_json(r.sparsity)},
                           {"actionability", summary_json(r.actionability)}});
    }
    j["notes"] = report.notes;
    j["verification_failures"] = report.verification_failures;
    return j.dump(2) + "\n";
  }
  if (format == ReportFormat::csv) {
    std::string out;
    for (const auto& c : report_columns()) out += (out.empty() ? "" : ",") + c;
    out += "\n";
    for (const auto& r : report.rows) {
      out += r.condition + "," + r.method + "," + num(r.pool) + "," + num(r.attempted) + "," + num(r.generated) + "," +
             num(r.plausible) + "," + num(r.actionable) + "," + num(r.feasible) + "," + num(r.feasible_pct) + "," +
             num(r.prox_jac.mean) + "," + num(r.prox_jac.stddev) + "," + num(r.prox_euc.mean) + "," +
             num(r.prox_euc.stddev) + "," + num(r.sparsity.mean) + "," + num(r.sparsity.stddev) + "," +
             num(r.actionability.mean) + "," + num(r.actionability.stddev) + "," + std::to_string(r.sparsity.count) +
             "\n";
    }
    return out;
  }
  std::string out = "# " + report.experiment + " (" ;
  for (std::size_t i = 0; i < report.datasets.size(); ++i) out += (i ? ", " : "") + report.datasets[i];
  out += "), seed " + std::to_string(report.seed) + "\n";
  std::vector<std::string> conditions;
  for (const auto& r : report.rows) {
    if (std::find(conditions.begin(), conditions.end(), r.condition) == conditions.end()) conditions.push_back(r.condition);
  }
  for (const auto& cond : conditions) {
    out += "\n## " + cond + "\n\n";
    out += "| Method | Plaus | Act | Feas | Feas % | prox-Jac | prox-Euc | Sparsity | Actionability |\n";
    out += "|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : report.rows) {
      if (r.condition != cond) continue;
      out += "| " + r.method + " | " + fixed(r.plausible, 1) + " | " + fixed(r.actionable, 1) + " | " +
             fixed(r.feasible, 1) + " | " + fixed(r.feasible_pct, 1) + " | " + fixed(r.prox_jac.mean, 2) + " | " +
             fixed(r.prox_euc.mean, 2) + " | " + fixed(r.sparsity.mean, 2) + " | " + fixed(r.actionability.mean, 2) +
             " |\n";
    }
  }
  return out;
}

std::string emit_timing(const ExperimentReport& report) {
  nlohmann::ordered_json j;
  j["experiment"] = report.experiment;
  j["setup_seconds"] = report.setup_seconds;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& t : report.timing) {
    j["rows"].push_back({{"condition", t.condition},
                         {"method", t.method},
                         {"instances", t.instances},
                         {"generated", t.generated},
                         {"total_seconds", t.total_seconds},
                         {"mean_seconds", t.mean_seconds}});
  }
  return j.dump(2) + "\n";
}

std::vector<ReportRow> rows_from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty report CSV");
  if (split_line(line) != report_columns()) throw ParseError("unexpected report CSV header");
  std::vector<ReportRow> rows;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty()) continue;
    const auto f = split_line(line);
    if (f.size() != report_columns().size()) throw ParseError("wrong field count in report CSV", row_no);
    try {
      ReportRow r;
      r.condition = f[0];
      r.method = f[1];
      r.pool = std::stod(f[2]);
      r.attempted = std::stod(f[3]);
      r.generated = std::stod(f[4]);
      r.plausible = std::stod(f[5]);
      r.actionable = std::stod(f[6]);
      r.feasible = std::stod(f[7]);
      r.feasible_pct = std::stod(f[8]);
      const auto n = static_cast<std::size_t>(std::stoull(f[17]));
      r.prox_jac = {n, std::stod(f[9]), std::stod(f[10])};
      r.prox_euc = {n, std::stod(f[11]), std::stod(f[12])};
      r.sparsity = {n, std::stod(f[13]), std::stod(f[14])};
      r.actionability = {n, std::stod(f[15]), std::stod(f[16])};
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw ParseError("non-numeric field in report CSV", row_no);
    }
  }
  return rows;
}

std::vector<ReportRow> rows_from_json(const std::string& json) {
  try {
    const auto j = nlohmann::json::parse(json);
    std::vector<ReportRow> rows;
    for (const auto& r : j.at("rows")) {
      ReportRow row;
      row.condition = r.at("condition").get<std::string>();
      row.method = r.at("method").get<std::string>();
      row.pool = r.at("pool").get<double>();
      row.attempted = r.at("attempted").get<double>();
      row.generated = r.at("generated").get<double>();
      row.plausible = r.at("plausible").get<double>();
      row.actionable = r.at("actionable").get<double>();
      row.feasible = r.at("feasible").get<double>();
      row.feasible_pct = r.at("feasible_pct").get<double>();
      row.prox_jac = summary_from(r.at("prox_jac"));
      row.prox_euc = summary_from(r.at("prox_euc"));
      row.sparsity = summary_from(r.at("sparsity"));
      row.actionability = summary_from(r.at("actionability"));
      rows.push_back(std::move(row));
    }
    return rows;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed report JSON: ") + e.what());
  }
}

}  // namespace ufce
