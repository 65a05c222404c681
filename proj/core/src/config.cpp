#include "perfedit/config.hpp"

#include <set>

#include "perfedit/jsonl.hpp"

namespace perfedit {

namespace {

/// Rejects keys outside the allowed set, naming the first offender.
void check_keys(const Json& j, const std::string& scope,
                const std::set<std::string>& allowed) {
  if (!j.is_object()) {
    throw std::invalid_argument("config section '" + scope +
                                "' must be an object");
  }
  for (const auto& item : j.items()) {
    const std::string& key = item.key();
    if (!allowed.contains(key)) {
      throw std::invalid_argument("unknown config key '" +
                                  (scope.empty() ? key : scope + "." + key) +
                                  "'");
    }
  }
}

}  // namespace

ToolkitConfig ToolkitConfig::from_json(const Json& j) {
  check_keys(j, "",
             {"version", "paths", "compile", "limits", "backend", "metrics",
              "retrieval", "seeds", "gen", "jobs"});
  const int version = j.value("version", kVersion);
  if (version != kVersion) {
    throw std::invalid_argument("unsupported config version " +
                                std::to_string(version) + ", expected " +
                                std::to_string(kVersion));
  }

  ToolkitConfig cfg;
  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    check_keys(p, "paths", {"corpus", "tests", "workdir", "cache"});
    cfg.paths.corpus = p.value("corpus", std::string{});
    cfg.paths.tests = p.value("tests", std::string{});
    cfg.paths.workdir = p.value("workdir", std::string{});
    cfg.paths.cache = p.value("cache", std::string{});
  }
  if (j.contains("compile")) {
    const auto& c = j.at("compile");
    check_keys(c, "compile", {"command", "flags", "timeout_s"});
    cfg.compile.compiler_command =
        c.value("command", cfg.compile.compiler_command);
    cfg.compile.flags =
        c.value("flags", std::vector<std::string>{});
    cfg.compile.timeout_s = c.value("timeout_s", cfg.compile.timeout_s);
    if (cfg.compile.timeout_s <= 0) {
      throw std::invalid_argument("compile.timeout_s must be > 0");
    }
  }
  if (j.contains("limits")) {
    const auto& l = j.at("limits");
    check_keys(l, "limits",
               {"wall_timeout_s", "memory_bytes", "max_output_bytes"});
    cfg.limits.wall_timeout_s =
        l.value("wall_timeout_s", cfg.limits.wall_timeout_s);
    if (cfg.limits.wall_timeout_s <= 0) {
      throw std::invalid_argument("limits.wall_timeout_s must be > 0");
    }
    if (l.contains("memory_bytes")) {
      cfg.limits.memory_bytes = l.at("memory_bytes").get<std::uint64_t>();
    }
    cfg.limits.max_output_bytes =
        l.value("max_output_bytes", cfg.limits.max_output_bytes);
  }
  if (j.contains("backend")) {
    const auto& b = j.at("backend");
    check_keys(b, "backend", {"type", "manifest_path", "simulator",
                              "wallclock"});
    cfg.backend.type = b.value("type", cfg.backend.type);
    cfg.backend.manifest_path = b.value("manifest_path", std::string{});
    if (b.contains("simulator")) {
      const auto& s = b.at("simulator");
      check_keys(s, "backend.simulator",
                 {"command", "stats_key", "timeout_s", "max_parallel",
                  "workdir"});
      cfg.backend.simulator.command = s.value("command", std::string{});
      cfg.backend.simulator.stats_key =
          s.value("stats_key", cfg.backend.simulator.stats_key);
      cfg.backend.simulator.timeout_s =
          s.value("timeout_s", cfg.backend.simulator.timeout_s);
      cfg.backend.simulator.max_parallel =
          s.value("max_parallel", cfg.backend.simulator.max_parallel);
      cfg.backend.simulator.workdir = s.value("workdir", std::string{});
    }
    if (b.contains("wallclock")) {
      const auto& w = b.at("wallclock");
      check_keys(w, "backend.wallclock",
                 {"simulated", "sigma", "seed", "base_cost"});
      cfg.backend.wallclock.simulated =
          w.value("simulated", cfg.backend.wallclock.simulated);
      cfg.backend.wallclock.sigma =
          w.value("sigma", cfg.backend.wallclock.sigma);
      cfg.backend.wallclock.seed =
          w.value("seed", cfg.backend.wallclock.seed);
      cfg.backend.wallclock.base_cost =
          w.value("base_cost", cfg.backend.wallclock.base_cost);
    }
    if (cfg.backend.type != "manifest" && cfg.backend.type != "simulator" &&
        cfg.backend.type != "wallclock") {
      throw std::invalid_argument("unknown backend.type '" +
                                  cfg.backend.type + "'");
    }
  }
  if (j.contains("metrics")) {
    const auto& m = j.at("metrics");
    check_keys(m, "metrics", {"opt_threshold", "dataset_min_improvement"});
    cfg.metrics.opt_threshold =
        m.value("opt_threshold", cfg.metrics.opt_threshold);
    cfg.metrics.dataset_min_improvement = m.value(
        "dataset_min_improvement", cfg.metrics.dataset_min_improvement);
  }
  if (j.contains("retrieval")) {
    const auto& r = j.at("retrieval");
    check_keys(r, "retrieval", {"k"});
    cfg.retrieval.k = r.value("k", cfg.retrieval.k);
    if (cfg.retrieval.k < 1) {
      throw std::invalid_argument("retrieval.k must be >= 1");
    }
  }
  if (j.contains("seeds")) {
    const auto& s = j.at("seeds");
    check_keys(s, "seeds", {"split"});
    cfg.seeds.split = s.value("split", cfg.seeds.split);
  }
  if (j.contains("gen")) {
    const auto& g = j.at("gen");
    check_keys(g, "gen",
               {"endpoint_url", "auth_token_env", "max_in_flight",
                "cache_dir", "max_retries", "initial_backoff_s", "n_cap"});
    cfg.gen.endpoint_url = g.value("endpoint_url", std::string{});
    cfg.gen.auth_token_env = g.value("auth_token_env", std::string{});
    cfg.gen.max_in_flight = g.value("max_in_flight", cfg.gen.max_in_flight);
    cfg.gen.cache_dir = g.value("cache_dir", std::string{});
    cfg.gen.max_retries = g.value("max_retries", cfg.gen.max_retries);
    cfg.gen.initial_backoff_s =
        g.value("initial_backoff_s", cfg.gen.initial_backoff_s);
    cfg.gen.n_cap = g.value("n_cap", cfg.gen.n_cap);
  }
  cfg.jobs = j.value("jobs", cfg.jobs);
  if (cfg.jobs < 1) {
    throw std::invalid_argument("jobs must be >= 1");
  }
  return cfg;
}

ToolkitConfig ToolkitConfig::from_file(const std::filesystem::path& path) {
  return from_json(Json::parse(read_file(path)));
}

Json ToolkitConfig::to_json() const {
  Json j{{"version", kVersion},
         {"paths",
          {{"corpus", paths.corpus.string()},
           {"tests", paths.tests.string()},
           {"workdir", paths.workdir.string()},
           {"cache", paths.cache.string()}}},
         {"compile",
          {{"command", compile.compiler_command},
           {"flags", compile.flags},
           {"timeout_s", compile.timeout_s}}},
         {"limits",
          {{"wall_timeout_s", limits.wall_timeout_s},
           {"max_output_bytes", limits.max_output_bytes}}},
         {"backend", {{"type", backend.type}}},
         {"metrics",
          {{"opt_threshold", metrics.opt_threshold},
           {"dataset_min_improvement", metrics.dataset_min_improvement}}},
         {"retrieval", {{"k", retrieval.k}}},
         {"seeds", {{"split", seeds.split}}},
         {"jobs", jobs}};
  if (limits.memory_bytes) {
    j["limits"]["memory_bytes"] = *limits.memory_bytes;
  }
  if (!backend.manifest_path.empty()) {
    j["backend"]["manifest_path"] = backend.manifest_path.string();
  }
  if (backend.type == "simulator") {
    j["backend"]["simulator"] = {
        {"command", backend.simulator.command},
        {"stats_key", backend.simulator.stats_key},
        {"timeout_s", backend.simulator.timeout_s},
        {"max_parallel", backend.simulator.max_parallel}};
  }
  if (backend.type == "wallclock") {
    j["backend"]["wallclock"] = {{"simulated", backend.wallclock.simulated},
                                 {"sigma", backend.wallclock.sigma},
                                 {"seed", backend.wallclock.seed},
                                 {"base_cost", backend.wallclock.base_cost}};
  }
  return j;
}

std::unique_ptr<PerfBackend> ToolkitConfig::make_backend() const {
  if (backend.type == "manifest") {
    if (backend.manifest_path.empty()) {
      throw std::invalid_argument(
          "backend.manifest_path is required for the manifest backend");
    }
    return std::make_unique<ManifestBackend>(
        ManifestBackend::from_file(backend.manifest_path));
  }
  if (backend.type == "simulator") {
    return std::make_unique<SimulatorDriver>(backend.simulator);
  }
  if (backend.type == "wallclock") {
    if (backend.wallclock.simulated) {
      return std::make_unique<WallClockBackend>(
          NoiseModel(backend.wallclock.sigma, backend.wallclock.seed,
                     backend.wallclock.base_cost));
    }
    return std::make_unique<WallClockBackend>();
  }
  throw std::invalid_argument("unknown backend.type '" + backend.type + "'");
}

}  // namespace perfedit
