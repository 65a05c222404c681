#include <algorithm>
#include <iostream>
#include <map>

#include "commands.hpp"
#include "perfedit/jsonl.hpp"
#include "perfedit/selfplay.hpp"

namespace perfedit::cli {

namespace fs = std::filesystem;

namespace {

struct DedupeOpts {
  std::string programs;
  std::string tests_dir;
  std::string out_signatures;
  std::string out_classes;
  std::string known;
  std::string out_novel;
  int budget = 50;
};

/// Shared input set: the union of the problems' test inputs in
/// (problem, test index) order, capped at the budget.
std::vector<std::string> gather_inputs(const std::string& tests_dir,
                                       int budget) {
  std::vector<std::string> inputs;
  std::vector<fs::path> problem_dirs;
  for (const auto& entry : fs::directory_iterator(tests_dir)) {
    if (entry.is_directory()) problem_dirs.push_back(entry.path());
  }
  std::sort(problem_dirs.begin(), problem_dirs.end());
  for (const auto& dir : problem_dirs) {
    for (const auto& test : load_test_suite(dir)) {
      if (static_cast<int>(inputs.size()) >= budget) return inputs;
      inputs.push_back(test.input);
    }
  }
  return inputs;
}

int run_selfplay_dedupe(const Context& ctx, const DedupeOpts& opts) {
  const ToolkitConfig cfg = ctx.config();
  const auto inputs = gather_inputs(opts.tests_dir, opts.budget);
  if (inputs.empty()) {
    throw std::invalid_argument("no test inputs under " + opts.tests_dir);
  }

  SignatureOptions sig_options;
  sig_options.compile = cfg.compile;
  sig_options.limits = cfg.limits;
  sig_options.jobs = cfg.jobs;

  std::vector<OutputSignature> signatures;
  for (const auto& row : read_jsonl(opts.programs, nullptr)) {
    const auto program_id = row.at("program_id").get<std::string>();
    const auto code = row.at("code").get<std::string>();
    signatures.push_back(
        output_signature(program_id, code, inputs, sig_options));
    std::cerr << "signed " << program_id << "\n";
  }

  write_jsonl_records(fs::path(opts.out_signatures), signatures);
  const auto classes = group_equivalence(signatures);
  write_file_atomic(opts.out_classes, Json(classes).dump(2) + "\n");
  std::cerr << signatures.size() << " programs, " << classes.size()
            << " equivalence classes\n";

  if (!opts.known.empty()) {
    if (opts.out_novel.empty()) {
      throw std::invalid_argument("--known requires --out-novel");
    }
    std::vector<OutputSignature> known;
    for (const auto& row : read_jsonl(opts.known, nullptr)) {
      known.push_back(row.get<OutputSignature>());
    }
    const auto novel = novelty_filter(signatures, known);
    write_jsonl_records(fs::path(opts.out_novel), novel);
    std::cerr << novel.size() << " behaviorally novel programs\n";
  }
  return 0;
}

struct AssembleOpts {
  std::string classes;
  std::string candidates;
  std::string out;
  double min_speedup = 5.0;
  int max_per_class = 3;
};

int run_selfplay_assemble(const Context& ctx, const AssembleOpts& opts) {
  (void)ctx.config();
  const auto classes =
      Json::parse(read_file(opts.classes)).get<std::vector<EquivalenceClass>>();

  std::vector<SyntheticCandidate> candidates;
  for (const auto& row : read_jsonl(opts.candidates, nullptr)) {
    SyntheticCandidate c;
    c.problem_id = row.at("problem_id").get<std::string>();
    c.slow_id = row.at("slow_id").get<std::string>();
    c.fast_id = row.at("fast_id").get<std::string>();
    c.slow_src = row.value("slow_src", std::string{});
    c.fast_src = row.value("fast_src", std::string{});
    c.slow_runtime = row.at("slow_runtime").get<PerfMeasurement>();
    c.fast_runtime = row.at("fast_runtime").get<PerfMeasurement>();
    candidates.push_back(std::move(c));
  }

  auto pairs = assemble_synthetic_pairs(classes, candidates,
                                        opts.min_speedup, opts.max_per_class);
  std::sort(pairs.begin(), pairs.end(),
            [](const ProgramPair& a, const ProgramPair& b) {
              return a.pair_id < b.pair_id;
            });
  write_jsonl_records(fs::path(opts.out), pairs);
  std::cerr << "assembled " << pairs.size() << " synthetic pairs\n";
  return 0;
}

}  // namespace

void register_selfplay(CLI::App& app, Context& ctx) {
  auto* selfplay =
      app.add_subcommand("selfplay", "Synthetic-program dedup and assembly");
  selfplay->require_subcommand(1);

  {
    auto opts = std::make_shared<DedupeOpts>();
    auto* cmd = selfplay->add_subcommand(
        "dedupe", "Compute output signatures and equivalence classes");
    cmd->add_option("--programs", opts->programs,
                    "programs.jsonl {program_id, code}")
        ->required();
    cmd->add_option("--tests", opts->tests_dir,
                    "Per-problem test suites supplying the shared inputs")
        ->required();
    cmd->add_option("--out-signatures", opts->out_signatures,
                    "signatures.jsonl")
        ->required();
    cmd->add_option("--out-classes", opts->out_classes, "classes.json")
        ->required();
    cmd->add_option("--known", opts->known,
                    "Known signatures to novelty-filter against");
    cmd->add_option("--out-novel", opts->out_novel,
                    "Where to write behaviorally novel signatures");
    cmd->add_option("--budget", opts->budget, "Shared input cap");
    cmd->callback(
        [&ctx, opts] { ctx.exit_code = run_selfplay_dedupe(ctx, *opts); });
  }

  {
    auto opts = std::make_shared<AssembleOpts>();
    auto* cmd = selfplay->add_subcommand(
        "assemble",
        "Filter optimized candidates into synthetic training pairs");
    cmd->add_option("--classes", opts->classes, "classes.json")->required();
    cmd->add_option("--candidates", opts->candidates,
                    "candidates.jsonl (judged-correct optimized programs)")
        ->required();
    cmd->add_option("--out", opts->out, "synthetic_pairs.jsonl")->required();
    cmd->add_option("--min-speedup", opts->min_speedup,
                    "Inclusive speedup threshold");
    cmd->add_option("--max-per-class", opts->max_per_class,
                    "Pair cap per equivalence class");
    cmd->callback(
        [&ctx, opts] { ctx.exit_code = run_selfplay_assemble(ctx, *opts); });
  }
}

}  // namespace perfedit::cli
