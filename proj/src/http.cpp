#include "ufce/http.hpp"

#include <iostream>

namespace ufce::service {

namespace {

void reply(httplib::Response& res, const Response& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

// Runs a handler, mapping library errors to JSON error bodies.
template <typename F>
void guarded(httplib::Response& res, F&& f) {
  try {
    reply(res, f());
  } catch (const RequestError& e) {
    reply(res, error_response(e.status(), e.what(), e.key()));
  } catch (const std::exception& e) {
    reply(res, error_response(500, e.what()));
  }
}

nlohmann::ordered_json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return nullptr;
  try {
    return nlohmann::ordered_json::parse(req.body);
  } catch (const nlohmann::ordered_json::parse_error& e) {
    throw RequestError(400, std::string("malformed JSON body: ") + e.what());
  }
}

}  // namespace

void configure_routes(httplib::Server& server, DatasetRegistry& registry, JobQueue& jobs,
                      const std::filesystem::path& static_dir) {
  server.Get("/datasets", [&](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { return handle_datasets(registry); });
  });
  server.Get("/datasets/:id/summary", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return handle_dataset_summary(registry, req.path_params.at("id")); });
  });
  server.Get("/datasets/:id/mi-pairs", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return handle_mi_pairs(registry, req.path_params.at("id")); });
  });
  server.Get("/mi-pairs", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      if (!req.has_param("dataset")) return error_response(422, "missing 'dataset' query parameter", "dataset");
      return handle_mi_pairs(registry, req.get_param_value("dataset"));
    });
  });
  server.Post("/explain", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return handle_explain(registry, parse_body(req)); });
  });
  server.Post("/bench/:rq", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return handle_bench_start(registry, jobs, req.path_params.at("rq"), parse_body(req)); });
  });
  server.Get("/jobs/:id", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return handle_job(jobs, req.path_params.at("id")); });
  });
  if (!static_dir.empty() && std::filesystem::is_directory(static_dir)) {
    server.set_mount_point("/", static_dir.string());
  }
}

bool serve(DatasetRegistry& registry, const ServeOptions& options) {
  httplib::Server server;
  JobQueue jobs;
  configure_routes(server, registry, jobs, options.static_dir);
  if (!server.bind_to_port(options.host, options.port)) return false;
  std::cerr << "ufce: serving " << registry.root().string() << " on http://" << options.host << ":" << options.port
            << "\n";
  return server.listen_after_bind();
}

}  // namespace ufce::service
