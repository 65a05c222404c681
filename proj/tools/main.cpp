#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Toolkit for building, benchmarking and evaluating "
               "performance-improving edit datasets"};
  app.require_subcommand(1);

  perfedit::cli::Context ctx;
  app.add_option("--config", ctx.config_path, "Toolkit config file (JSON)");
  app.add_option("--jobs", ctx.jobs_override, "Worker process/thread budget");

  perfedit::cli::register_dataset(app, ctx);
  perfedit::cli::register_eval(app, ctx);
  perfedit::cli::register_metrics(app, ctx);
  perfedit::cli::register_audit(app, ctx);
  perfedit::cli::register_selfplay(app, ctx);
  perfedit::cli::register_tags(app, ctx);
  perfedit::cli::register_index(app, ctx);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return ctx.exit_code;
}
