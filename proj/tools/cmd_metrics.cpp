#include <iostream>

#include "commands.hpp"
#include "perfedit/jsonl.hpp"
#include "perfedit/metrics.hpp"

namespace perfedit::cli {

namespace {

struct SummarizeOpts {
  std::string rows;
  std::string out;
  int k = 0;  // 0 = infer from the widest candidate list
};

int run_metrics_summarize(const Context& ctx, const SummarizeOpts& opts) {
  (void)ctx.config();
  std::vector<EvalRow> rows;
  for (const auto& row : read_jsonl(opts.rows, nullptr)) {
    rows.push_back(row.get<EvalRow>());
  }
  int k = opts.k;
  if (k <= 0) {
    for (const auto& row : rows) {
      for (const auto& c : row.candidates) {
        k = std::max(k, c.sample_index + 1);
      }
    }
    k = std::max(k, 1);
  }
  const auto summary = aggregate(rows, k);
  write_file_atomic(opts.out, Json(summary).dump(2) + "\n");
  std::cerr << "rows: " << rows.size() << ", pct_opt: " << summary.pct_opt
            << ", mean_speedup: " << summary.mean_speedup << "\n";
  return 0;
}

}  // namespace

void register_metrics(CLI::App& app, Context& ctx) {
  auto* metrics = app.add_subcommand("metrics", "Metric computation");
  metrics->require_subcommand(1);

  auto opts = std::make_shared<SummarizeOpts>();
  auto* cmd = metrics->add_subcommand(
      "summarize", "Aggregate eval_rows.jsonl into summary.json");
  cmd->add_option("--rows", opts->rows, "eval_rows.jsonl")->required();
  cmd->add_option("--out", opts->out, "Output summary.json")->required();
  cmd->add_option("--k", opts->k,
                  "Best@k budget to report (default: widest row)");
  cmd->callback(
      [&ctx, opts] { ctx.exit_code = run_metrics_summarize(ctx, *opts); });
}

}  // namespace perfedit::cli
