#include <algorithm>
#include <iostream>
#include <map>
#include <optional>

#include "commands.hpp"
#include "perfedit/dataset.hpp"
#include "perfedit/jsonl.hpp"

namespace perfedit::cli {

namespace fs = std::filesystem;

namespace {

struct DatasetBuildOpts {
  std::string submissions;
  std::string tests_dir;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::vector<double> ratios{0.8, 0.1, 0.1};
  std::optional<double> min_improvement;  // flag overrides config
  std::string backend_type;
  std::string manifest_path;
};

int run_dataset_build(const Context& ctx, const DatasetBuildOpts& opts) {
  ToolkitConfig cfg = ctx.config();
  if (!opts.backend_type.empty()) cfg.backend.type = opts.backend_type;
  if (!opts.manifest_path.empty()) {
    cfg.backend.manifest_path = opts.manifest_path;
  }
  if (opts.ratios.size() != 3) {
    throw std::invalid_argument("--ratios needs exactly three fractions");
  }
  const double min_improvement =
      opts.min_improvement.value_or(cfg.metrics.dataset_min_improvement);

  auto backend = cfg.make_backend();
  auto corpus = load_submissions(opts.submissions);
  std::vector<Reject> rejects = std::move(corpus.rejects);

  auto build = build_trajectories(std::move(corpus.submissions));

  // Test suites are loaded once per problem.
  std::map<std::string, std::vector<TestCase>> suites;
  for (const auto& traj : build.trajectories) {
    if (!suites.contains(traj.problem_id)) {
      const fs::path suite_dir = fs::path(opts.tests_dir) / traj.problem_id;
      suites[traj.problem_id] =
          fs::exists(suite_dir) ? load_test_suite(suite_dir)
                                : std::vector<TestCase>{};
    }
  }

  RelabelOptions relabel_options;
  relabel_options.compile = cfg.compile;
  relabel_options.limits = cfg.limits;
  relabel_options.jobs = cfg.jobs;

  std::vector<ProgramPair> pairs;
  for (auto& traj : build.trajectories) {
    auto relabeled = relabel_runtimes(traj.programs,
                                      suites.at(traj.problem_id), *backend,
                                      relabel_options);
    for (auto& r : relabeled.unmeasurable) rejects.push_back(std::move(r));

    // Unmeasurable programs leave the trajectory before pairing.
    Trajectory measured;
    measured.user_id = traj.user_id;
    measured.problem_id = traj.problem_id;
    for (auto& p : traj.programs) {
      if (relabeled.runtimes.contains(p.submission_id)) {
        measured.programs.push_back(std::move(p));
      }
    }
    auto traj_pairs =
        make_pairs(measured, relabeled.runtimes, min_improvement);
    for (auto& p : traj_pairs) pairs.push_back(std::move(p));
  }

  const auto assignment = split_by_problem(
      pairs, {opts.ratios[0], opts.ratios[1], opts.ratios[2]}, opts.seed);
  apply_split(pairs, assignment);

  std::sort(pairs.begin(), pairs.end(),
            [](const ProgramPair& a, const ProgramPair& b) {
              return a.pair_id < b.pair_id;
            });

  const fs::path out(opts.out_dir);
  fs::create_directories(out);
  write_jsonl_records(out / "pairs.jsonl", pairs);
  write_file_atomic(out / "splits.json",
                    split_assignment_to_json(assignment).dump(2) + "\n");
  write_jsonl_records(out / "rejects.jsonl", rejects);

  std::cerr << "pairs: " << pairs.size() << ", problems: "
            << assignment.by_problem.size() << ", rejects: " << rejects.size()
            << "\n";
  return rejects.empty() ? 0 : 2;
}

struct HqOpts {
  std::string pairs;
  std::string out;
  int max_per_problem = 4;
};

int run_dataset_hq(const Context& ctx, const HqOpts& opts) {
  (void)ctx.config();
  std::vector<ProgramPair> pairs;
  for (const auto& row : read_jsonl(opts.pairs, nullptr)) {
    pairs.push_back(row.get<ProgramPair>());
  }
  auto kept = build_hq_subset(std::move(pairs), opts.max_per_problem);
  std::sort(kept.begin(), kept.end(),
            [](const ProgramPair& a, const ProgramPair& b) {
              return a.pair_id < b.pair_id;
            });
  write_jsonl_records(fs::path(opts.out), kept);
  std::cerr << "kept " << kept.size() << " pairs\n";
  return 0;
}

struct AuditDupOpts {
  std::string submissions;
  std::string reported;
  std::string out;
  double threshold = 1.1;
};

int run_dataset_audit_duplicates(const Context& ctx,
                                 const AuditDupOpts& opts) {
  (void)ctx.config();
  auto corpus = load_submissions(opts.submissions);
  const Json reported_json = Json::parse(read_file(opts.reported));
  std::map<std::string, double> reported;
  for (const auto& item : reported_json.items()) {
    reported[item.key()] = item.value().get<double>();
  }
  const auto groups = audit_duplicate_runtime_inconsistency(
      corpus.submissions, reported, opts.threshold);
  Json out = Json::array();
  for (const auto& g : groups) {
    out.push_back(Json{{"code_hash", g.code_hash},
                       {"min_reported", g.min_reported},
                       {"max_reported", g.max_reported},
                       {"ratio", g.ratio},
                       {"submission_ids", g.submission_ids}});
  }
  write_file_atomic(opts.out, out.dump(2) + "\n");
  std::cerr << "flagged " << groups.size() << " duplicate groups\n";
  return 0;
}

}  // namespace

void register_dataset(CLI::App& app, Context& ctx) {
  auto* dataset = app.add_subcommand("dataset", "Dataset pipeline");
  dataset->require_subcommand(1);

  {
    auto opts = std::make_shared<DatasetBuildOpts>();
    auto* cmd = dataset->add_subcommand(
        "build", "Build slow/fast pairs from a submission log");
    cmd->add_option("--submissions", opts->submissions, "submissions.jsonl")
        ->required();
    cmd->add_option("--tests", opts->tests_dir,
                    "Directory of per-problem test suites")
        ->required();
    cmd->add_option("--out", opts->out_dir, "Output directory")->required();
    cmd->add_option("--seed", opts->seed, "Split shuffle seed");
    cmd->add_option("--ratios", opts->ratios,
                    "Train/val/test ratios (three fractions)")
        ->expected(3);
    cmd->add_option("--min-improvement", opts->min_improvement,
                    "Strict relative-improvement pair filter");
    cmd->add_option("--backend", opts->backend_type,
                    "manifest | simulator | wallclock");
    cmd->add_option("--manifest", opts->manifest_path,
                    "Manifest file for the manifest backend");
    cmd->callback(
        [&ctx, opts] { ctx.exit_code = run_dataset_build(ctx, *opts); });
  }

  {
    auto opts = std::make_shared<HqOpts>();
    auto* cmd = dataset->add_subcommand(
        "hq", "Select the high-quality subset (top speedups per problem)");
    cmd->add_option("--pairs", opts->pairs, "pairs.jsonl")->required();
    cmd->add_option("--out", opts->out, "Output pairs.jsonl")->required();
    cmd->add_option("--max-per-problem", opts->max_per_problem,
                    "Pair cap per problem");
    cmd->callback(
        [&ctx, opts] { ctx.exit_code = run_dataset_hq(ctx, *opts); });
  }

  {
    auto opts = std::make_shared<AuditDupOpts>();
    auto* cmd = dataset->add_subcommand(
        "audit-duplicates",
        "Flag identical code with inconsistent reported runtimes");
    cmd->add_option("--submissions", opts->submissions, "submissions.jsonl")
        ->required();
    cmd->add_option("--reported", opts->reported,
                    "JSON map submission_id -> reported runtime")
        ->required();
    cmd->add_option("--out", opts->out, "Output report JSON")->required();
    cmd->add_option("--threshold", opts->threshold,
                    "max/min ratio above which a group is flagged");
    cmd->callback([&ctx, opts] {
      ctx.exit_code = run_dataset_audit_duplicates(ctx, *opts);
    });
  }
}

}  // namespace perfedit::cli
