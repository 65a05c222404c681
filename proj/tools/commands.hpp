#pragma once

#include <CLI11.hpp>

#include "perfedit/config.hpp"

namespace perfedit::cli {

/// Shared command state. Exit codes: 0 success, 1 fatal, 2 success with
/// rejects recorded.
struct Context {
  std::string config_path;
  int jobs_override = 0;  // 0 = take from config
  int exit_code = 0;

  ToolkitConfig config() const {
    ToolkitConfig cfg = config_path.empty()
                            ? ToolkitConfig{}
                            : ToolkitConfig::from_file(config_path);
    if (jobs_override > 0) cfg.jobs = jobs_override;
    return cfg;
  }
};

void register_dataset(CLI::App& app, Context& ctx);
void register_eval(CLI::App& app, Context& ctx);
void register_metrics(CLI::App& app, Context& ctx);
void register_audit(CLI::App& app, Context& ctx);
void register_selfplay(CLI::App& app, Context& ctx);
void register_tags(CLI::App& app, Context& ctx);
void register_index(CLI::App& app, Context& ctx);

}  // namespace perfedit::cli
