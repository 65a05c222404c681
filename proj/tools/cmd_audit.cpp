#include <iostream>

#include "commands.hpp"
#include "perfedit/jsonl.hpp"
#include "perfedit/variance.hpp"

namespace perfedit::cli {

namespace {

struct AuditOpts {
  std::string mode = "deterministic";
  int n_pairs = 500;
  double sigma = -1.0;
  double target_mean = -1.0;
  std::uint64_t seed = 0;
  double base_cost = 1.0;
  std::string out;
  std::string csv;
};

int run_audit_variance(const Context& ctx, const AuditOpts& opts) {
  (void)ctx.config();
  if (opts.n_pairs < 1) {
    throw std::invalid_argument("--pairs must be >= 1");
  }

  std::unique_ptr<PerfBackend> backend;
  if (opts.mode == "deterministic") {
    // A one-entry manifest: the same probe measured any number of times.
    backend = std::make_unique<ManifestBackend>(
        std::map<std::string, std::map<int, double>>{
            {"probe", {{0, opts.base_cost}}}});
  } else if (opts.mode == "simulated") {
    double sigma = opts.sigma;
    if (sigma < 0.0 && opts.target_mean > 0.0) {
      sigma = calibrate_noise(opts.target_mean);
    }
    if (sigma < 0.0) {
      throw std::invalid_argument(
          "simulated mode needs --sigma or --target-mean");
    }
    backend = std::make_unique<WallClockBackend>(
        NoiseModel(sigma, opts.seed, opts.base_cost));
  } else {
    throw std::invalid_argument("--mode must be deterministic or simulated");
  }

  MeasureRequest probe;
  probe.program_id = "probe";
  probe.test_index = 0;
  const AuditReport report =
      audit_identical_pairs(probe, opts.n_pairs, *backend);

  write_file_atomic(opts.out, audit_report_to_json(report).dump(2) + "\n");
  if (!opts.csv.empty()) {
    write_file_atomic(opts.csv, audit_ratios_csv(report));
  }
  std::cerr << "pairs: " << report.n_pairs
            << ", mean ratio: " << report.mean_ratio
            << ", std: " << report.std_ratio
            << ", q95: " << report.quantiles.at(0.95) << "\n";
  return 0;
}

}  // namespace

void register_audit(CLI::App& app, Context& ctx) {
  auto* audit = app.add_subcommand("audit", "Measurement audits");
  audit->require_subcommand(1);

  auto opts = std::make_shared<AuditOpts>();
  auto* cmd = audit->add_subcommand(
      "variance",
      "Quantify phantom speedups on identical program pairs");
  cmd->add_option("--mode", opts->mode, "deterministic | simulated");
  cmd->add_option("--pairs", opts->n_pairs, "Number of identical pairs");
  cmd->add_option("--sigma", opts->sigma, "Lognormal noise parameter");
  cmd->add_option("--target-mean", opts->target_mean,
                  "Calibrate sigma so E[ratio] matches this mean");
  cmd->add_option("--seed", opts->seed, "Noise PRNG seed");
  cmd->add_option("--base-cost", opts->base_cost, "Baseline cost value");
  cmd->add_option("--out", opts->out, "Output audit.json")->required();
  cmd->add_option("--csv", opts->csv, "Optional CSV of raw ratios");
  cmd->callback(
      [&ctx, opts] { ctx.exit_code = run_audit_variance(ctx, *opts); });
}

}  // namespace perfedit::cli
