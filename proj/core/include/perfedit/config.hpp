#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "perfedit/backend.hpp"
#include "perfedit/gen_client.hpp"
#include "perfedit/harness.hpp"
#include "perfedit/types.hpp"

namespace perfedit {

/// Shared toolkit configuration. Loading is strict: an unknown key anywhere
/// in the document is rejected with the offending key named, and a schema
/// version other than the current one is rejected loudly.
struct ToolkitConfig {
  static constexpr int kVersion = 1;

  struct Paths {
    std::filesystem::path corpus;
    std::filesystem::path tests;
    std::filesystem::path workdir;
    std::filesystem::path cache;
  } paths;

  CompileConfig compile;
  RunLimits limits;

  struct Backend {
    std::string type = "manifest";  // manifest | simulator | wallclock
    std::filesystem::path manifest_path;
    SimulatorConfig simulator;
    struct WallClock {
      bool simulated = false;
      double sigma = 0.0;
      std::uint64_t seed = 0;
      double base_cost = 1.0;
    } wallclock;
  } backend;

  struct Metrics {
    double opt_threshold = 0.10;          // inclusive, for %Opt
    double dataset_min_improvement = 0.10;  // strict, for pair extraction
  } metrics;

  struct Retrieval {
    int k = 2;
  } retrieval;

  struct Seeds {
    std::uint64_t split = 0;
  } seeds;

  GenClientConfig gen;

  int jobs = 1;

  static ToolkitConfig from_json(const Json& j);
  static ToolkitConfig from_file(const std::filesystem::path& path);
  Json to_json() const;

  /// Instantiates the configured backend.
  std::unique_ptr<PerfBackend> make_backend() const;
};

}  // namespace perfedit
