#include "ufce/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "ufce/bench.hpp"
#include "ufce/http.hpp"
#include "ufce/service.hpp"

namespace ufce {

namespace {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

// `<dir>/<stem>.schema.json` next to a CSV file.
fs::path sibling_schema(const fs::path& csv) {
  return csv.parent_path() / (csv.stem().string() + ".schema.json");
}

// Paths stored in a model file are tried as given, then relative to the model.
fs::path resolve(const fs::path& stored, const fs::path& model_path) {
  if (stored.is_absolute() || fs::exists(stored)) return stored;
  return model_path.parent_path() / stored;
}

struct TrainArgs {
  std::string data, schema, out, solver = "newton";
};

int do_train(const TrainArgs& a, std::ostream& out) {
  const fs::path csv = a.data;
  const fs::path schema = a.schema.empty() ? sibling_schema(csv) : fs::path(a.schema);
  const auto data = load_dataset(csv, SchemaConfig::from_file(schema));
  LogisticConfig cfg;
  cfg.solver = a.solver == "gd" ? LogisticSolver::gradient_descent : LogisticSolver::newton;
  ModelFile mf;
  mf.model = train_logistic(data, cfg);
  mf.schema_hash = data.schema.hash_hex();
  mf.dataset = csv.stem().string();
  mf.data_path = fs::absolute(csv).lexically_normal().string();
  mf.schema_path = fs::absolute(schema).lexically_normal().string();
  write_file(a.out, mf.to_json_text());
  out << "trained on " << data.size() << " rows, training accuracy " << accuracy(mf.model, data) << ", wrote "
      << a.out << "\n";
  return kExitOk;
}

int do_explain(const std::string& model_path, const std::string& request_path, const std::string& out_path,
               std::ostream& out, std::ostream& err) {
  const auto mf = ModelFile::from_json_text(read_file(model_path));
  if (mf.data_path.empty()) throw Error("model file " + model_path + " does not record its training data");
  const fs::path csv = resolve(mf.data_path, model_path);
  const fs::path schema = mf.schema_path.empty() ? sibling_schema(csv) : resolve(mf.schema_path, model_path);
  auto data = load_dataset(csv, SchemaConfig::from_file(schema));
  if (data.schema.hash_hex() != mf.schema_hash) {
    throw Error("model " + model_path + " was trained on a different schema than " + csv.string());
  }
  nlohmann::ordered_json request;
  try {
    request = nlohmann::ordered_json::parse(read_file(request_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("malformed request " + request_path + ": " + e.what());
  }
  const std::string id = mf.dataset.empty() ? csv.stem().string() : mf.dataset;
  const auto ds = service::load_artifacts(id, std::move(data), std::make_shared<LogisticClassifier>(mf.model));
  const auto resp = service::explain(ds, request);
  const std::string text = resp.body.dump(2) + "\n";
  if (resp.status != 200) {
    err << "ufce: explain failed (" << resp.status << "): " << resp.body.value("error", std::string()) << "\n";
    return kExitRuntime;
  }
  if (out_path.empty()) {
    out << text;
  } else {
    write_file(out_path, text);
  }
  return kExitOk;
}

int do_mi_pairs(const std::string& data_dir, const std::string& dataset, const std::string& csv, std::size_t top,
                std::ostream& out) {
  Dataset data;
  std::string id = dataset;
  if (!csv.empty()) {
    data = load_dataset(csv, SchemaConfig::from_file(sibling_schema(csv)));
    id = fs::path(csv).stem().string();
  } else {
    data = service::DatasetRegistry(data_dir).load(dataset);
  }
  const auto pairs = rank_pairs(data);
  nlohmann::ordered_json j;
  j["dataset"] = id;
  j["pairs"] = nlohmann::ordered_json::array();
  for (std::size_t n = 0; n < pairs.size() && (top == 0 || n < top); ++n) {
    j["pairs"].push_back(
        {{"a", data.schema[pairs[n].i].name}, {"b", data.schema[pairs[n].j].name}, {"mi", pairs[n].score}});
  }
  out << j.dump(2) << "\n";
  return kExitOk;
}

struct BenchArgs {
  std::string rq, out, data_dir;
  std::vector<std::string> datasets;
  std::uint64_t seed = 0;
  std::size_t pool_size = 50, repetitions = 10, folds = 5;
};

int do_bench(const BenchArgs& a, std::ostream& out) {
  service::DatasetRegistry registry(a.data_dir);
  auto names = a.datasets;
  if (names.empty() || (names.size() == 1 && names[0] == "all")) {
    if (a.rq != "rq3") throw Error(a.rq + " needs --dataset");
    names = registry.ids();
  }
  if (a.rq != "rq3" && names.size() != 1) throw Error(a.rq + " runs on exactly one dataset");
  std::vector<NamedDataset> data;
  for (const auto& n : names) data.push_back({n, registry.load(n)});

  BenchConfig cfg;
  cfg.seed = a.seed;
  cfg.pool_size = a.pool_size;
  cfg.repetitions = a.repetitions;
  cfg.folds = a.folds;
  ExperimentReport report;
  if (a.rq == "rq1") {
    report = run_rq1(data[0], cfg);
  } else if (a.rq == "rq2") {
    report = run_rq2(data[0], cfg);
  } else {
    report = run_rq3(data, cfg);
  }
  const fs::path dir = a.out;
  fs::create_directories(dir);
  write_file(dir / "report.json", emit_report(report, ReportFormat::json));
  write_file(dir / "report.csv", emit_report(report, ReportFormat::csv));
  write_file(dir / "report.md", emit_report(report, ReportFormat::markdown));
  write_file(dir / "config.json", cfg.to_json().dump(2) + "\n");
  write_file(dir / "timing.json", emit_timing(report));
  out << emit_report(report, ReportFormat::markdown);
  if (report.verification_failures > 0) {
    throw Error(std::to_string(report.verification_failures) + " tallied candidates failed re-verification");
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"User-feedback counterfactual explanations for tabular classifiers", "ufce"};
  app.require_subcommand(1);
  const std::string default_root = service::DatasetRegistry::default_root().string();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Fit the logistic-regression model and write a model file");
  train_cmd->add_option("--data", train.data, "CSV file")->required();
  train_cmd->add_option("--schema", train.schema, "Schema descriptor (default: <data>.schema.json)");
  train_cmd->add_option("--out", train.out, "Model file to write")->required();
  train_cmd->add_option("--solver", train.solver, "newton or gd")->check(CLI::IsMember({"newton", "gd"}));

  std::string model_path, request_path, response_path;
  auto* explain_cmd = app.add_subcommand("explain", "Answer an explain request with a trained model");
  explain_cmd->add_option("--model", model_path, "Model file from `ufce train`")->required();
  explain_cmd->add_option("--request", request_path, "Explain request JSON")->required();
  explain_cmd->add_option("--out", response_path, "Response file (default: standard output)");

  std::string mi_dataset, mi_csv, mi_dir = default_root;
  std::size_t mi_top = 0;
  auto* mi_cmd = app.add_subcommand("mi-pairs", "Rank feature pairs by mutual information");
  auto* mi_ds = mi_cmd->add_option("--dataset", mi_dataset, "Dataset id under the data directory");
  auto* mi_data = mi_cmd->add_option("--data", mi_csv, "CSV file with a sibling schema descriptor");
  mi_ds->excludes(mi_data);
  mi_cmd->add_option("--data-dir", mi_dir, "Dataset root");
  mi_cmd->add_option("--top", mi_top, "Keep only the first n pairs");

  BenchArgs bench;
  bench.data_dir = default_root;
  auto* bench_cmd = app.add_subcommand("bench", "Run an experiment and write report files");
  bench_cmd->add_option("experiment", bench.rq, "rq1, rq2 or rq3")->required()->check(CLI::IsMember({"rq1", "rq2", "rq3"}));
  bench_cmd->add_option("--dataset", bench.datasets, "Dataset id (repeatable; rq3 defaults to all)");
  bench_cmd->add_option("--seed", bench.seed, "Base seed");
  bench_cmd->add_option("--out", bench.out, "Output directory")->required();
  bench_cmd->add_option("--pool-size", bench.pool_size, "Test instances per pool")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--repetitions", bench.repetitions, "Random-feedback repetitions (rq2)")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--folds", bench.folds, "Cross-validation folds")->check(CLI::Range(2, 100));
  bench_cmd->add_option("--data-dir", bench.data_dir, "Dataset root");

  service::ServeOptions serve_opts;
  std::string serve_dir = default_root, static_dir = "webui/dist";
  auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP JSON API");
  serve_cmd->add_option("--port", serve_opts.port, "Port")->check(CLI::Range(1, 65535));
  serve_cmd->add_option("--host", serve_opts.host, "Bind address");
  serve_cmd->add_option("--data-dir", serve_dir, "Dataset root");
  serve_cmd->add_option("--static", static_dir, "Directory served at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "ufce: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*train_cmd) return do_train(train, out);
    if (*explain_cmd) return do_explain(model_path, request_path, response_path, out, err);
    if (*mi_cmd) {
      if (mi_dataset.empty() && mi_csv.empty()) {
        err << "ufce: mi-pairs needs --dataset or --data\n\n" << mi_cmd->help();
        return kExitUsage;
      }
      return do_mi_pairs(mi_dir, mi_dataset, mi_csv, mi_top, out);
    }
    if (*bench_cmd) return do_bench(bench, out);
    if (*serve_cmd) {
      service::DatasetRegistry registry(serve_dir);
      serve_opts.static_dir = static_dir;
      if (!service::serve(registry, serve_opts)) {
        err << "ufce: cannot listen on " << serve_opts.host << ":" << serve_opts.port << "\n";
        return kExitRuntime;
      }
      return kExitOk;
    }
  } catch (const std::exception& e) {
    err << "ufce: error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace ufce
