#include <algorithm>
#include <iostream>
#include <map>
#include <optional>
#include <random>

#include "commands.hpp"
#include "perfedit/dataset.hpp"
#include "perfedit/gen_client.hpp"
#include "perfedit/jsonl.hpp"
#include "perfedit/metrics.hpp"
#include "perfedit/prompt.hpp"
#include "perfedit/retrieval.hpp"

namespace perfedit::cli {

namespace fs = std::filesystem;

namespace {

struct EvalOpts {
  std::string pairs;
  std::string split = "test";
  std::string out_dir;
  int k = 8;
  bool offline = false;
  std::string candidates;
  std::string style = "instruction";
  std::string tests_dir;
  std::string backend_type;
  std::string manifest_path;
  std::optional<double> opt_threshold;  // flag overrides config
  std::string endpoint_url;
};

bool in_selected_split(const ProgramPair& pair, const std::string& split) {
  return split == "all" || to_string(pair.split) == split;
}

/// Correctness and runtime for one candidate program.
Candidate judge_candidate(const ToolkitConfig& cfg, PerfBackend& backend,
                          const std::string& candidate_id,
                          const std::string& text,
                          const std::vector<TestCase>& suite,
                          int sample_index) {
  Candidate candidate;
  candidate.sample_index = sample_index;

  auto extracted = extract_program(text);
  if (!extracted.ok()) return candidate;  // empty extraction -> incorrect

  if (!backend.requires_artifact()) {
    // Manifest-style judging: the program is correct iff the table has an
    // entry for every test in the suite.
    std::vector<PerfMeasurement> parts;
    for (const auto& test : suite) {
      MeasureRequest req;
      req.program_id = candidate_id;
      req.test_index = test.index;
      req.input = test.input;
      req.limits = cfg.limits;
      auto measured = backend.measure(req);
      if (!measured.ok()) return candidate;
      parts.push_back(measured.value());
    }
    candidate.correct = true;
    candidate.new_runtime = sum_measurements(parts);
    return candidate;
  }

  const fs::path workdir =
      (cfg.paths.workdir.empty() ? fs::temp_directory_path()
                                 : cfg.paths.workdir) /
      "perfedit-eval";
  auto compiled = compile(extracted.value(), cfg.compile, workdir);
  if (!compiled.ok()) return candidate;
  RunOptions run_options;
  run_options.program_id = candidate_id;
  run_options.jobs = cfg.jobs;
  const RunReport report =
      run_tests(compiled.value().path, suite, cfg.limits, backend,
                run_options);
  if (judge(report) == Judgement::Correct && report.total_runtime) {
    candidate.correct = true;
    candidate.new_runtime = *report.total_runtime;
  }
  return candidate;
}

std::map<std::string, std::map<int, std::string>> load_candidates_file(
    const std::string& path) {
  std::map<std::string, std::map<int, std::string>> by_example;
  for (const auto& row : read_jsonl(path, nullptr)) {
    const auto example_id = row.at("example_id").get<std::string>();
    const int sample_index = row.at("sample_index").get<int>();
    by_example[example_id][sample_index] = row.at("code").get<std::string>();
  }
  return by_example;
}

std::map<std::string, std::map<int, std::string>> generate_candidates(
    const ToolkitConfig& cfg, const EvalOpts& opts,
    const std::vector<ProgramPair>& selected,
    const std::vector<ProgramPair>& train_pool) {
  GenClientConfig gen_cfg = cfg.gen;
  if (!opts.endpoint_url.empty()) gen_cfg.endpoint_url = opts.endpoint_url;
  if (gen_cfg.endpoint_url.empty()) {
    throw std::invalid_argument(
        "no candidates file and no generation endpoint configured");
  }
  GenClient client(gen_cfg);
  const PromptStyle style = prompt_style_from_string(opts.style);

  std::optional<EmbeddingIndex> index;
  std::map<std::string, const ProgramPair*> train_by_id;
  if (style == PromptStyle::Retrieval) {
    std::vector<std::pair<std::string, std::string>> docs;
    for (const auto& pair : train_pool) {
      docs.emplace_back(pair.pair_id, pair.src);
      train_by_id[pair.pair_id] = &pair;
    }
    if (docs.empty()) {
      throw std::invalid_argument("retrieval style needs a train split");
    }
    index = EmbeddingIndex::build(docs);
  }

  // Fixed few-shot examples are drawn once with a seeded generator, so the
  // whole run is reproducible.
  std::vector<ProgramPair> fixed_examples;
  if (style == PromptStyle::FewShot || style == PromptStyle::ChainOfThought) {
    if (train_pool.empty()) {
      throw std::invalid_argument(to_string(style) +
                                  " style needs a train split");
    }
    std::mt19937_64 rng(cfg.seeds.split);
    for (int i = 0; i < 2 && !train_pool.empty(); ++i) {
      fixed_examples.push_back(
          train_pool[static_cast<std::size_t>(rng() % train_pool.size())]);
    }
  }

  std::map<std::string, std::map<int, std::string>> by_example;
  for (const auto& pair : selected) {
    std::vector<ProgramPair> examples = fixed_examples;
    if (style == PromptStyle::Retrieval) {
      for (const auto& hit : index->query(pair.src, cfg.retrieval.k)) {
        examples.push_back(*train_by_id.at(hit.pair_id));
      }
    }
    std::optional<int> tag;
    if (style == PromptStyle::PerfConditioned) tag = 10;

    const PromptResult prompt = build_prompt(style, examples, pair.src, tag);
    GenRequest req;
    req.prompt = prompt.text;
    req.n = opts.k;
    auto response = client.generate(req);
    if (!response.ok()) {
      throw std::runtime_error("generation failed for " + pair.pair_id +
                               ": " + response.error().detail);
    }
    auto& samples = by_example[pair.pair_id];
    for (std::size_t i = 0; i < response.value().samples.size(); ++i) {
      samples[static_cast<int>(i)] = response.value().samples[i];
    }
  }
  return by_example;
}

int run_eval(const Context& ctx, const EvalOpts& opts) {
  ToolkitConfig cfg = ctx.config();
  if (!opts.backend_type.empty()) cfg.backend.type = opts.backend_type;
  if (!opts.manifest_path.empty()) {
    cfg.backend.manifest_path = opts.manifest_path;
  }
  if (opts.opt_threshold) cfg.metrics.opt_threshold = *opts.opt_threshold;
  if (opts.k < 1) throw std::invalid_argument("--k must be >= 1");

  auto backend = cfg.make_backend();

  std::vector<ProgramPair> all_pairs;
  for (const auto& row : read_jsonl(opts.pairs, nullptr)) {
    all_pairs.push_back(row.get<ProgramPair>());
  }
  std::vector<ProgramPair> selected;
  std::vector<ProgramPair> train_pool;
  for (auto& pair : all_pairs) {
    if (in_selected_split(pair, opts.split)) selected.push_back(pair);
    if (pair.split == Split::Train) train_pool.push_back(pair);
  }
  if (selected.empty()) {
    throw std::invalid_argument("no pairs in split '" + opts.split + "'");
  }
  std::sort(selected.begin(), selected.end(),
            [](const ProgramPair& a, const ProgramPair& b) {
              return a.pair_id < b.pair_id;
            });

  std::map<std::string, std::map<int, std::string>> candidates_by_example;
  if (opts.offline || !opts.candidates.empty()) {
    if (opts.candidates.empty()) {
      throw std::invalid_argument("--offline requires --candidates");
    }
    candidates_by_example = load_candidates_file(opts.candidates);
  } else {
    candidates_by_example =
        generate_candidates(cfg, opts, selected, train_pool);
  }

  std::map<std::string, std::vector<TestCase>> suites;
  std::vector<EvalRow> rows;
  for (const auto& pair : selected) {
    if (!suites.contains(pair.problem_id)) {
      suites[pair.problem_id] =
          load_test_suite(fs::path(opts.tests_dir) / pair.problem_id);
    }
    const auto& suite = suites.at(pair.problem_id);

    std::vector<Candidate> candidates;
    const auto it = candidates_by_example.find(pair.pair_id);
    if (it != candidates_by_example.end()) {
      for (const auto& [sample_index, text] : it->second) {
        if (sample_index >= opts.k) continue;
        const std::string candidate_id =
            pair.pair_id + "#" + std::to_string(sample_index);
        candidates.push_back(judge_candidate(cfg, *backend, candidate_id,
                                             text, suite, sample_index));
      }
    }
    rows.push_back(evaluate_row(pair.pair_id, pair.src_runtime,
                                std::move(candidates),
                                cfg.metrics.opt_threshold));
  }

  const MetricsSummary summary = aggregate(rows, opts.k);

  const fs::path out(opts.out_dir);
  fs::create_directories(out);
  write_jsonl_records(out / "eval_rows.jsonl", rows);
  Json summary_json(summary);
  summary_json["config"] = Json{{"split", opts.split},
                                {"style", opts.style},
                                {"opt_threshold", cfg.metrics.opt_threshold},
                                {"backend", backend->descriptor()},
                                {"offline", opts.offline}};
  write_file_atomic(out / "summary.json", summary_json.dump(2) + "\n");

  std::cerr << "examples: " << rows.size() << ", pct_opt: " << summary.pct_opt
            << ", mean_speedup: " << summary.mean_speedup
            << ", pct_correct: " << summary.pct_correct << "\n";
  return 0;
}

}  // namespace

void register_eval(CLI::App& app, Context& ctx) {
  auto opts = std::make_shared<EvalOpts>();
  auto* cmd = app.add_subcommand(
      "eval", "Generate (or load) candidates, judge them, compute metrics");
  cmd->add_option("--pairs", opts->pairs, "pairs.jsonl")->required();
  cmd->add_option("--split", opts->split, "train | val | test | all");
  cmd->add_option("--out", opts->out_dir, "Output directory")->required();
  cmd->add_option("--k", opts->k, "Samples per example (Best@k)");
  cmd->add_flag("--offline", opts->offline,
                "Use a candidates file instead of a generation endpoint");
  cmd->add_option("--candidates", opts->candidates,
                  "candidates.jsonl {example_id, sample_index, code}");
  cmd->add_option("--style", opts->style,
                  "instruction | few_shot | chain_of_thought | retrieval | "
                  "perf_conditioned");
  cmd->add_option("--tests", opts->tests_dir,
                  "Directory of per-problem test suites")
      ->required();
  cmd->add_option("--backend", opts->backend_type,
                  "manifest | simulator | wallclock");
  cmd->add_option("--manifest", opts->manifest_path,
                  "Manifest file for the manifest backend");
  cmd->add_option("--opt-threshold", opts->opt_threshold,
                  "Relative improvement required to count as optimized");
  cmd->add_option("--endpoint", opts->endpoint_url,
                  "Generation endpoint URL (online mode)");
  cmd->callback([&ctx, opts] { ctx.exit_code = run_eval(ctx, *opts); });
}

}  // namespace perfedit::cli
