#include <iostream>
#include <map>

#include "commands.hpp"
#include "perfedit/jsonl.hpp"
#include "perfedit/prompt.hpp"

namespace perfedit::cli {

namespace {

struct TagsOpts {
  std::string solutions;
  std::string out;
};

int run_tags_assign(const Context& ctx, const TagsOpts& opts) {
  (void)ctx.config();  // validate --config even though tags need none of it
  std::map<std::string, std::vector<std::pair<std::string, double>>>
      by_problem;
  for (const auto& row : read_jsonl(opts.solutions, nullptr)) {
    by_problem[row.at("problem_id").get<std::string>()].emplace_back(
        row.at("solution_id").get<std::string>(),
        row.at("runtime").get<double>());
  }
  const auto tags = assign_perf_tags(by_problem);
  Json out = Json::object();
  for (const auto& [solution_id, tag] : tags) {
    out[solution_id] = tag;
  }
  write_file_atomic(opts.out, out.dump(2) + "\n");
  std::cerr << "tagged " << tags.size() << " solutions\n";
  return 0;
}

}  // namespace

void register_tags(CLI::App& app, Context& ctx) {
  auto* tags = app.add_subcommand("tags", "Performance-condition tags");
  tags->require_subcommand(1);

  auto opts = std::make_shared<TagsOpts>();
  auto* cmd = tags->add_subcommand(
      "assign", "Assign per-problem decile tags (fastest = 10)");
  cmd->add_option("--solutions", opts->solutions,
                  "solutions.jsonl {problem_id, solution_id, runtime}")
      ->required();
  cmd->add_option("--out", opts->out, "Output tags JSON")->required();
  cmd->callback(
      [&ctx, opts] { ctx.exit_code = run_tags_assign(ctx, *opts); });
}

}  // namespace perfedit::cli
