#include "ufce/service.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>

#include "ufce/metrics.hpp"
#include "ufce/mi.hpp"

namespace ufce::service {

namespace {

using Json = nlohmann::ordered_json;
using OJson = nlohmann::ordered_json;

double number_at(const Json& j, const std::string& key) {
  if (!j.is_number()) throw RequestError(422, "'" + key + "' must be a number", key);
  return j.get<double>();
}

std::pair<double, double> parse_bound(const Json& j, const std::string& key) {
  if (j.is_array() && j.size() == 2) return {number_at(j[0], key), number_at(j[1], key)};
  if (j.is_object() && j.contains("lower") && j.contains("upper")) {
    return {number_at(j["lower"], key), number_at(j["upper"], key)};
  }
  throw RequestError(422, "constraint '" + key + "' must be [lower, upper]", key);
}

std::size_t feature_index(const Schema& schema, const std::string& name, const std::string& where) {
  const auto i = schema.index_of(name);
  if (!i) throw RequestError(422, "unknown feature '" + name + "' in " + where, name);
  return *i;
}

ExplainOptions parse_options(const Json& j) {
  ExplainOptions o;
  if (j.is_null()) return o;
  if (!j.is_object()) throw RequestError(422, "'options' must be an object", "options");
  for (const auto& [key, value] : j.items()) {
    if (key == "lambda") {
      o.lambda = number_at(value, key);
    } else if (key == "lof_threshold") {
      o.lof_threshold = number_at(value, key);
    } else if (key == "actionability_threshold") {
      o.actionability_threshold = number_at(value, key);
    } else if (key == "strict_intersection") {
      if (!value.is_boolean()) throw RequestError(422, "'strict_intersection' must be a boolean", key);
      o.strict_intersection = value.get<bool>();
    } else if (key == "max_candidates") {
      if (!value.is_number_unsigned() || value.get<std::size_t>() == 0) {
        throw RequestError(422, "'max_candidates' must be a positive integer", key);
      }
      o.max_candidates = value.get<std::size_t>();
    } else if (key == "seed") {
      if (!value.is_number_unsigned()) throw RequestError(422, "'seed' must be a non-negative integer", key);
      o.seed = value.get<std::uint64_t>();
    } else if (key == "timing") {
      if (!value.is_boolean()) throw RequestError(422, "'timing' must be a boolean", key);
      o.timing = value.get<bool>();
    } else {
      throw RequestError(422, "unknown option '" + key + "'", key);
    }
  }
  if (o.lambda < 0) throw RequestError(422, "'lambda' must be non-negative", "lambda");
  if (!(o.lof_threshold > 0)) throw RequestError(422, "'lof_threshold' must be positive", "lof_threshold");
  if (o.actionability_threshold < 0 || o.actionability_threshold > 1) {
    throw RequestError(422, "'actionability_threshold' must lie in [0, 1]", "actionability_threshold");
  }
  return o;
}

OJson named(const Instance& z, const Schema& schema) {
  OJson out = OJson::object();
  for (std::size_t i = 0; i < schema.size(); ++i) out[schema[i].name] = z[i];
  return out;
}

OJson named(const FeatureBounds& b, const Schema& schema) {
  OJson out = OJson::object();
  for (const auto& e : b.entries) out[schema[e.feature].name] = {e.lower, e.upper};
  return out;
}

std::shared_ptr<const ExplainContext> tuned_context(const LoadedDataset& ds, const ExplainRequest& req) {
  const auto& base = *ds.context;
  if (req.t != base.config.t) {
    ExplainConfig cfg = base.config;
    cfg.t = req.t;
    auto rebuilt = build_context(ds.data, ds.model, cfg);
    return tuned_context(LoadedDataset{ds.id, ds.data, ds.model, rebuilt, ds.cv}, req);
  }
  auto ctx = std::make_shared<ExplainContext>(base);
  ctx->config.lambda = req.options.lambda;
  ctx->config.strict_intersection = req.options.strict_intersection;
  ctx->config.seed = req.options.seed;
  ctx->config.max_candidates_per_method = req.options.max_candidates;
  ctx->distance = DistanceModel(ctx->schema(), req.options.lambda);
  ctx->lof.set_threshold(req.options.lof_threshold);
  return ctx;
}

OJson dataset_entry(const std::string& id, const Dataset& d) {
  OJson e;
  e["id"] = id;
  e["rows"] = d.size();
  e["features"] = d.dimension();
  e["label"] = d.schema.label;
  return e;
}

}  // namespace

Response error_response(int status, const std::string& message, const std::string& key) {
  Response r;
  r.status = status;
  r.body["error"] = message;
  if (!key.empty()) r.body["key"] = key;
  return r;
}

LoadedDataset load_artifacts(std::string id, Dataset data, std::shared_ptr<const LogisticClassifier> model,
                             const ExplainConfig& config) {
  LoadedDataset ds;
  ds.id = std::move(id);
  ds.cv = cross_validate(data, kSummaryFolds, config.seed);
  if (!model) model = std::make_shared<LogisticClassifier>(train_logistic(data));
  ds.model = std::move(model);
  ds.context = build_context(data, ds.model, config);
  ds.data = std::move(data);
  return ds;
}

DatasetRegistry::DatasetRegistry(std::filesystem::path root) : root_(std::move(root)) {}

std::filesystem::path DatasetRegistry::default_root() {
  if (const char* env = std::getenv("UFCE_DATA_DIR"); env && *env) return env;
  return "data";
}

std::vector<std::string> DatasetRegistry::ids() const {
  std::vector<std::string> out;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(root_, ec)) {
    const std::string name = entry.path().filename().string();
    const std::string suffix = ".schema.json";
    if (name.size() <= suffix.size() || name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) continue;
    const std::string id = name.substr(0, name.size() - suffix.size());
    if (std::filesystem::exists(root_ / (id + ".csv"))) out.push_back(id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool DatasetRegistry::has(const std::string& id) const {
  const auto all = ids();
  return std::find(all.begin(), all.end(), id) != all.end();
}

Dataset DatasetRegistry::load(const std::string& id) const {
  if (!has(id)) throw RequestError(404, "unknown dataset '" + id + "'", "dataset");
  return load_dataset(root_ / (id + ".csv"), SchemaConfig::from_file(root_ / (id + ".schema.json")));
}

std::shared_ptr<const LoadedDataset> DatasetRegistry::get(const std::string& id) {
  std::lock_guard lock(mutex_);
  if (auto it = cache_.find(id); it != cache_.end()) return it->second;
  auto ds = std::make_shared<const LoadedDataset>(load_artifacts(id, load(id), nullptr));
  cache_.emplace(id, ds);
  return ds;
}

ExplainRequest parse_explain_request(const Json& j, const Schema& schema) {
  if (!j.is_object()) throw RequestError(422, "request must be a JSON object");
  static const std::vector<std::string> known{"dataset", "instance", "t", "constraints", "features_to_change", "options"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw RequestError(422, "unknown request field '" + key + "'", key);
    }
  }
  ExplainRequest r;
  if (j.contains("dataset")) {
    if (!j["dataset"].is_string()) throw RequestError(422, "'dataset' must be a string", "dataset");
    r.dataset = j["dataset"].get<std::string>();
  }

  if (!j.contains("instance") || !j["instance"].is_object()) {
    throw RequestError(422, "'instance' must map every feature to a value", "instance");
  }
  const Json& inst = j["instance"];
  for (const auto& [key, value] : inst.items()) (void)feature_index(schema, key, "instance");
  r.instance.values.resize(schema.size());
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& f = schema[i];
    if (!inst.contains(f.name)) throw RequestError(422, "instance is missing feature '" + f.name + "'", f.name);
    r.instance[i] = number_at(inst[f.name], f.name);
    if (f.is_categorical() && r.instance[i] != f.categories[0] && r.instance[i] != f.categories[1]) {
      throw RequestError(422, "'" + f.name + "' holds a code outside the schema", f.name);
    }
  }

  if (j.contains("t")) {
    if (!j["t"].is_number_integer() || (j["t"].get<int>() != 0 && j["t"].get<int>() != 1)) {
      throw RequestError(422, "'t' must be 0 or 1", "t");
    }
    r.t = j["t"].get<int>();
  }

  if (!j.contains("constraints") || !j["constraints"].is_object()) {
    throw RequestError(422, "'constraints' must map feature names to [lower, upper]", "constraints");
  }
  for (const auto& [key, value] : j["constraints"].items()) {
    const std::size_t i = feature_index(schema, key, "constraints");
    const auto [lo, hi] = parse_bound(value, key);
    r.constraints.set(i, lo, hi);
  }
  try {
    r.constraints.validate(schema);
  } catch (const ArgumentError& e) {
    std::string key;
    for (const auto& b : r.constraints.entries) {
      if (std::string(e.what()).find("'" + schema[b.feature].name + "'") != std::string::npos) key = schema[b.feature].name;
    }
    throw RequestError(422, e.what(), key);
  }

  if (j.contains("features_to_change")) {
    const Json& list = j["features_to_change"];
    if (!list.is_array()) throw RequestError(422, "'features_to_change' must be a list of names", "features_to_change");
    for (const auto& name : list) {
      if (!name.is_string()) throw RequestError(422, "'features_to_change' must be a list of names", "features_to_change");
      const std::size_t i = feature_index(schema, name.get<std::string>(), "features_to_change");
      if (!r.constraints.contains(i)) {
        throw RequestError(422, "feature '" + schema[i].name + "' is listed to change but has no constraint",
                           schema[i].name);
      }
      if (std::find(r.features.begin(), r.features.end(), i) == r.features.end()) r.features.push_back(i);
    }
  } else {
    r.features = r.constraints.features();
  }
  PerturbationMap kept;
  for (const auto& b : r.constraints.entries) {
    if (std::find(r.features.begin(), r.features.end(), b.feature) != r.features.end()) kept.entries.push_back(b);
  }
  r.constraints = std::move(kept);
  r.options = parse_options(j.contains("options") ? j["options"] : Json());
  return r;
}

OJson to_json(const ExplainRequest& r, const Schema& schema) {
  OJson j;
  if (!r.dataset.empty()) j["dataset"] = r.dataset;
  j["instance"] = named(r.instance, schema);
  j["t"] = r.t;
  j["constraints"] = named(r.constraints, schema);
  j["features_to_change"] = OJson::array();
  for (const auto i : r.features) j["features_to_change"].push_back(schema[i].name);
  j["options"] = {{"lambda", r.options.lambda},
                  {"lof_threshold", r.options.lof_threshold},
                  {"actionability_threshold", r.options.actionability_threshold},
                  {"strict_intersection", r.options.strict_intersection},
                  {"max_candidates", r.options.max_candidates},
                  {"seed", r.options.seed},
                  {"timing", r.options.timing}};
  return j;
}

Response explain(const LoadedDataset& ds, const Json& request) {
  const auto start = std::chrono::steady_clock::now();
  const Schema& schema = ds.data.schema;
  ExplainRequest req;
  try {
    req = parse_explain_request(request, schema);
  } catch (const RequestError& e) {
    return error_response(e.status(), e.what(), e.key());
  }
  if (ds.model->predict(req.instance) == req.t) {
    return error_response(409, "instance is already classified as " + std::to_string(req.t));
  }
  std::shared_ptr<const ExplainContext> ctx;
  ExplainResult result;
  try {
    ctx = tuned_context(ds, req);
    result = run_ufce(*ctx, req.instance, req.constraints);
  } catch (const DesiredSpaceEmpty& e) {
    return error_response(422, e.what(), "t");
  } catch (const NothingToExplain& e) {
    return error_response(409, e.what());
  } catch (const ArgumentError& e) {
    return error_response(422, e.what());
  }

  const Instance& x = req.instance;
  const auto ranked = rank_candidates(x, result.candidates, req.t, *ctx->model, ctx->distance);
  Response resp;
  OJson& body = resp.body;
  body["dataset"] = ds.id;
  body["t"] = req.t;
  body["candidates"] = OJson::array();
  std::vector<Instance> seen;
  for (const auto& c : ranked) {
    if (body["candidates"].size() >= req.options.max_candidates) break;
    if (std::find(seen.begin(), seen.end(), c.z) != seen.end()) continue;
    const bool valid = ctx->model->predict(c.z) == req.t;
    const bool plausible = ctx->lof.is_plausible(c.z);
    const auto rec =
        evaluate(c.z, x, schema, req.features, valid, plausible, req.options.actionability_threshold);
    if (!rec.feasible) continue;
    seen.push_back(c.z);
    OJson cand;
    cand["method"] = method_name(c.method);
    cand["label"] = method_label(c.method);
    cand["delta"] = ctx->distance(c.z, x);
    cand["z"] = named(c.z, schema);
    cand["changes"] = OJson::array();
    for (const auto i : changed_indices(c.z, x, schema)) {
      cand["changes"].push_back(
          {{"feature", schema[i].name}, {"before", x[i]}, {"after", c.z[i]}, {"difference", c.z[i] - x[i]}});
    }
    cand["metrics"] = ufce::to_json(rec);
    body["candidates"].push_back(std::move(cand));
  }
  body["subspace"] = named(result.subspace, schema);
  body["radius"] = result.radius;
  body["neighbor_count"] = result.neighbor_count;
  auto warnings = result.warnings;
  for (const auto& b : req.constraints.entries) {
    if (schema[b.feature].is_protected) warnings.push_back("feature '" + schema[b.feature].name + "' is protected and is never changed");
  }
  body["warnings"] = warnings;
  if (req.options.timing) {
    body["elapsed_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return resp;
}

Response handle_explain(DatasetRegistry& registry, const Json& request) {
  if (!request.is_object() || !request.contains("dataset") || !request["dataset"].is_string()) {
    return error_response(422, "'dataset' must name a dataset", "dataset");
  }
  const std::string id = request["dataset"].get<std::string>();
  if (!registry.has(id)) return error_response(404, "unknown dataset '" + id + "'", "dataset");
  return explain(*registry.get(id), request);
}

Response handle_datasets(DatasetRegistry& registry) {
  Response r;
  r.body["datasets"] = OJson::array();
  for (const auto& id : registry.ids()) r.body["datasets"].push_back(dataset_entry(id, registry.load(id)));
  return r;
}

Response handle_dataset_summary(DatasetRegistry& registry, const std::string& id) {
  if (!registry.has(id)) return error_response(404, "unknown dataset '" + id + "'", "dataset");
  const auto ds = registry.get(id);
  const Dataset& d = ds->data;
  Response r;
  OJson& b = r.body;
  b = dataset_entry(id, d);
  b["positive_class"] = d.schema.positive_class;
  b["features"] = OJson::array();
  for (const auto& f : d.schema.features) {
    OJson e;
    e["name"] = f.name;
    e["kind"] = f.is_numeric() ? "numeric" : "categorical";
    e["min"] = f.observed_min;
    e["max"] = f.observed_max;
    e["mad"] = f.mad;
    e["protected"] = f.is_protected;
    if (f.is_categorical()) e["categories"] = f.categories;
    b["features"].push_back(std::move(e));
  }
  const auto positive = static_cast<std::size_t>(std::count(d.labels.begin(), d.labels.end(), 1));
  b["class_balance"] = {{"positive", positive},
                        {"negative", d.size() - positive},
                        {"positive_fraction", d.empty() ? 0.0 : static_cast<double>(positive) / static_cast<double>(d.size())}};
  b["model"] = {{"kind", "logistic_regression"},
                {"cv_folds", kSummaryFolds},
                {"cv_mean_accuracy", ds->cv.mean_accuracy},
                {"cv_std_accuracy", ds->cv.std_accuracy}};
  return r;
}

Response handle_mi_pairs(DatasetRegistry& registry, const std::string& id) {
  if (!registry.has(id)) return error_response(404, "unknown dataset '" + id + "'", "dataset");
  const auto ds = registry.get(id);
  const Schema& s = ds->data.schema;
  Response r;
  r.body["dataset"] = id;
  r.body["pairs"] = OJson::array();
  for (const auto& p : ds->context->mi_pairs) {
    r.body["pairs"].push_back({{"a", s[p.i].name}, {"b", s[p.j].name}, {"mi", p.score}});
  }
  return r;
}

JobQueue::~JobQueue() { wait_all(); }

void JobQueue::wait_all() {
  std::vector<std::thread> running;
  {
    std::lock_guard lock(mutex_);
    running.swap(threads_);
  }
  for (auto& t : running) {
    if (t.joinable()) t.join();
  }
}

std::string JobQueue::submit(std::string kind, std::function<OJson()> work) {
  std::lock_guard lock(mutex_);
  const std::string id = "job-" + std::to_string(next_++);
  jobs_[id].kind = std::move(kind);
  threads_.emplace_back([this, id, work = std::move(work)] {
    {
      std::lock_guard l(mutex_);
      jobs_[id].state = "running";
    }
    OJson result;
    std::string error;
    try {
      result = work();
    } catch (const std::exception& e) {
      error = e.what();
    }
    std::lock_guard l(mutex_);
    Job& job = jobs_[id];
    if (error.empty()) {
      job.state = "done";
      job.result = std::move(result);
    } else {
      job.state = "failed";
      job.error = std::move(error);
    }
  });
  return id;
}

std::optional<OJson> JobQueue::status(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = jobs_.find(id);
  if (it == jobs_.end()) return std::nullopt;
  OJson j;
  j["id"] = id;
  j["kind"] = it->second.kind;
  j["state"] = it->second.state;
  if (it->second.state == "done") j["result"] = it->second.result;
  if (it->second.state == "failed") j["error"] = it->second.error;
  return j;
}

BenchConfig bench_config_from_json(const Json& body) {
  BenchConfig c;
  if (body.is_null()) return c;
  if (!body.is_object()) throw RequestError(422, "bench parameters must be a JSON object");
  auto count = [&](const char* key, std::size_t& out) {
    if (!body.contains(key)) return;
    if (!body[key].is_number_unsigned() || body[key].get<std::size_t>() == 0) {
      throw RequestError(422, std::string("'") + key + "' must be a positive integer", key);
    }
    out = body[key].get<std::size_t>();
  };
  if (body.contains("seed")) {
    if (!body["seed"].is_number_unsigned()) throw RequestError(422, "'seed' must be a non-negative integer", "seed");
    c.seed = body["seed"].get<std::uint64_t>();
  }
  count("pool_size", c.pool_size);
  count("repetitions", c.repetitions);
  count("folds", c.folds);
  if (c.folds < 2) throw RequestError(422, "'folds' must be at least 2", "folds");
  return c;
}

OJson run_bench(const std::string& rq, std::span<const NamedDataset> datasets, const BenchConfig& config) {
  ExperimentReport report;
  if (rq == "rq3") {
    report = run_rq3(datasets, config);
  } else if (datasets.size() != 1) {
    throw ArgumentError(rq + " runs on exactly one dataset");
  } else if (rq == "rq1") {
    report = run_rq1(datasets[0], config);
  } else if (rq == "rq2") {
    report = run_rq2(datasets[0], config);
  } else {
    throw ArgumentError("unknown experiment '" + rq + "'");
  }
  OJson out;
  out["report"] = OJson::parse(emit_report(report, ReportFormat::json));
  out["timing"] = OJson::parse(emit_timing(report));
  return out;
}

Response handle_bench_start(DatasetRegistry& registry, JobQueue& jobs, const std::string& rq, const Json& body) {
  if (rq != "rq1" && rq != "rq2" && rq != "rq3") return error_response(404, "unknown experiment '" + rq + "'");
  BenchConfig config;
  std::vector<std::string> names;
  try {
    config = bench_config_from_json(body);
    if (body.is_object() && body.contains("dataset")) {
      if (!body["dataset"].is_string()) throw RequestError(422, "'dataset' must be a string", "dataset");
      names.push_back(body["dataset"].get<std::string>());
    } else if (body.is_object() && body.contains("datasets")) {
      if (!body["datasets"].is_array()) throw RequestError(422, "'datasets' must be a list", "datasets");
      for (const auto& n : body["datasets"]) {
        if (!n.is_string()) throw RequestError(422, "'datasets' must be a list of names", "datasets");
        names.push_back(n.get<std::string>());
      }
    } else if (rq == "rq3") {
      names = registry.ids();
    } else {
      throw RequestError(422, rq + " needs a 'dataset'", "dataset");
    }
    if (rq != "rq3" && names.size() != 1) throw RequestError(422, rq + " runs on exactly one dataset", "dataset");
    for (const auto& n : names) {
      if (!registry.has(n)) throw RequestError(404, "unknown dataset '" + n + "'", "dataset");
    }
  } catch (const RequestError& e) {
    return error_response(e.status(), e.what(), e.key());
  }
  std::vector<NamedDataset> data;
  for (const auto& n : names) data.push_back({n, registry.load(n)});
  const std::string id = jobs.submit(rq, [rq, data = std::move(data), config] { return run_bench(rq, data, config); });
  Response r;
  r.status = 202;
  r.body["job_id"] = id;
  r.body["status_url"] = "/jobs/" + id;
  return r;
}

Response handle_job(const JobQueue& jobs, const std::string& id) {
  auto s = jobs.status(id);
  if (!s) return error_response(404, "unknown job '" + id + "'");
  Response r;
  r.body = std::move(*s);
  return r;
}

}  // namespace ufce::service
