#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "ufce/bench.hpp"
#include "ufce/data.hpp"
#include "ufce/errors.hpp"
#include "ufce/explainer.hpp"
#include "ufce/model.hpp"

namespace ufce::service {

/// Status code plus JSON body, independent of the transport.
struct Response {
  int status = 200;
  nlohmann::ordered_json body;
};

/// A request the API refuses; carries the HTTP status and, for schema
/// violations, the offending key.
class RequestError : public Error {
 public:
  RequestError(int status, const std::string& what, std::string key = {})
      : Error(what), status_(status), key_(std::move(key)) {}

  [[nodiscard]] int status() const noexcept { return status_; }
  [[nodiscard]] const std::string& key() const noexcept { return key_; }

 private:
  int status_;
  std::string key_;
};

Response error_response(int status, const std::string& message, const std::string& key = {});

/// A dataset with its trained model and explainer context, built once and
/// shared read-only between requests.
struct LoadedDataset {
  std::string id;
  Dataset data;
  std::shared_ptr<const LogisticClassifier> model;
  std::shared_ptr<const ExplainContext> context;
  CrossValidation cv;
};

inline constexpr std::size_t kSummaryFolds = 5;

LoadedDataset load_artifacts(std::string id, Dataset data, std::shared_ptr<const LogisticClassifier> model,
                             const ExplainConfig& config = {});

/// Datasets under a root directory: every `<id>.schema.json` with a
/// matching `<id>.csv`.
class DatasetRegistry {
 public:
  explicit DatasetRegistry(std::filesystem::path root);

  /// $UFCE_DATA_DIR when set, otherwise ./data.
  static std::filesystem::path default_root();

  [[nodiscard]] const std::filesystem::path& root() const noexcept { return root_; }
  [[nodiscard]] std::vector<std::string> ids() const;
  [[nodiscard]] bool has(const std::string& id) const;
  /// Throws RequestError(404) for unknown ids.
  [[nodiscard]] Dataset load(const std::string& id) const;
  /// Trains and caches on first use; later calls return the cached artifacts.
  std::shared_ptr<const LoadedDataset> get(const std::string& id);

 private:
  std::filesystem::path root_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const LoadedDataset>> cache_;
};

struct ExplainOptions {
  double lambda = 1.0;
  double lof_threshold = 1.5;
  double actionability_threshold = kActionabilityThreshold;
  bool strict_intersection = true;
  std::size_t max_candidates = 5;
  std::uint64_t seed = 0;
  bool timing = false;  // adds elapsed_seconds, which makes responses non-reproducible
};

struct ExplainRequest {
  std::string dataset;
  Instance instance;
  int t = 1;
  PerturbationMap constraints;
  std::vector<std::size_t> features;  // change list; defaults to the constraint keys
  ExplainOptions options;
};

/// Throws RequestError(422) naming the offending key.
ExplainRequest parse_explain_request(const nlohmann::ordered_json& j, const Schema& schema);
nlohmann::ordered_json to_json(const ExplainRequest& r, const Schema& schema);

Response explain(const LoadedDataset& ds, const nlohmann::ordered_json& request);
Response handle_explain(DatasetRegistry& registry, const nlohmann::ordered_json& request);
Response handle_datasets(DatasetRegistry& registry);
Response handle_dataset_summary(DatasetRegistry& registry, const std::string& id);
Response handle_mi_pairs(DatasetRegistry& registry, const std::string& id);

/// Background runs with polling. Jobs own their threads; the destructor
/// waits for running jobs.
class JobQueue {
 public:
  JobQueue() = default;
  JobQueue(const JobQueue&) = delete;
  JobQueue& operator=(const JobQueue&) = delete;
  ~JobQueue();

  std::string submit(std::string kind, std::function<nlohmann::ordered_json()> work);
  /// Snapshot of {id, kind, state, result | error}; nullopt for unknown ids.
  [[nodiscard]] std::optional<nlohmann::ordered_json> status(const std::string& id) const;
  void wait_all();

 private:
  struct Job {
    std::string kind;
    std::string state = "queued";
    nlohmann::ordered_json result;
    std::string error;
  };
  mutable std::mutex mutex_;
  std::map<std::string, Job> jobs_;
  std::vector<std::thread> threads_;
  std::size_t next_ = 1;
};

/// Parses {dataset | datasets, seed, pool_size, repetitions, folds}.
BenchConfig bench_config_from_json(const nlohmann::ordered_json& body);
Response handle_bench_start(DatasetRegistry& registry, JobQueue& jobs, const std::string& rq,
                            const nlohmann::ordered_json& body);
Response handle_job(const JobQueue& jobs, const std::string& id);

/// Runs rq1/rq2/rq3 and returns {report, timing} as parsed documents.
nlohmann::ordered_json run_bench(const std::string& rq, std::span<const NamedDataset> datasets,
                                 const BenchConfig& config);

}  // namespace ufce::service
