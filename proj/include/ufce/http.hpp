#pragma once

#include <filesystem>
#include <string>

#include "httplib.h"
#include "ufce/service.hpp"

namespace ufce::service {

inline constexpr int kDefaultPort = 8080;

/// Registers the JSON API and, when `static_dir` exists, serves it at `/`.
void configure_routes(httplib::Server& server, DatasetRegistry& registry, JobQueue& jobs,
                      const std::filesystem::path& static_dir = {});

struct ServeOptions {
  std::string host = "0.0.0.0";
  int port = kDefaultPort;
  std::filesystem::path static_dir;
};

/// Blocks until the server stops. Returns false if the port cannot be bound.
bool serve(DatasetRegistry& registry, const ServeOptions& options);

}  // namespace ufce::service
