// Integration tests that drive the installed CLI binary end to end.

#include <gtest/gtest.h>
#include <unistd.h>

#include <atomic>
#include <thread>

#include <httplib.h>

#include "perfedit/jsonl.hpp"
#include "perfedit/subprocess.hpp"
#include "perfedit/types.hpp"

namespace perfedit {
namespace {

namespace fs = std::filesystem;

const fs::path kTool = PERFEDIT_TOOL_PATH;
const fs::path kFixtures = PERFEDIT_FIXTURES_DIR;

fs::path temp_dir(const std::string& tag) {
  const auto dir = fs::temp_directory_path() /
                   ("perfedit-cli-" + tag + "-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunResult run_tool(const std::vector<std::string>& args) {
  std::vector<std::string> argv = {kTool.string()};
  argv.insert(argv.end(), args.begin(), args.end());
  RunLimits limits;
  limits.wall_timeout_s = 120.0;
  return run_process(argv, "", limits);
}

fs::path build_fixture_dataset(const fs::path& out) {
  const auto result = run_tool(
      {"dataset", "build", "--submissions",
       (kFixtures / "corpus" / "submissions.jsonl").string(), "--tests",
       (kFixtures / "corpus" / "tests").string(), "--out", out.string(),
       "--seed", "7", "--ratios", "0.34", "0.33", "0.33", "--backend",
       "manifest", "--manifest",
       (kFixtures / "corpus" / "manifest.json").string()});
  EXPECT_EQ(result.exit_code, 2) << result.err;  // s10 is unmeasurable
  return out / "pairs.jsonl";
}

TEST(Cli, MissingInputsExitOne) {
  const auto result = run_tool({"dataset", "build", "--submissions",
                                "/nonexistent.jsonl", "--tests", "/none",
                                "--out", "/tmp/none-out"});
  EXPECT_EQ(result.exit_code, 1);
  EXPECT_FALSE(result.err.empty());
}

TEST(Cli, EmptySubmissionsGiveEmptyPairsExitZero) {
  const auto dir = temp_dir("empty");
  write_file_atomic(dir / "subs.jsonl", "");
  const auto result = run_tool(
      {"dataset", "build", "--submissions", (dir / "subs.jsonl").string(),
       "--tests", (kFixtures / "corpus" / "tests").string(), "--out",
       (dir / "out").string(), "--backend", "manifest", "--manifest",
       (kFixtures / "corpus" / "manifest.json").string()});
  EXPECT_EQ(result.exit_code, 0) << result.err;
  EXPECT_TRUE(read_jsonl(dir / "out" / "pairs.jsonl", nullptr).empty());
  fs::remove_all(dir);
}

TEST(Cli, DatasetHqCapsPerProblem) {
  const auto dir = temp_dir("hq");
  // Six pairs in one problem with speedups 6..1 (pair k has tgt 100/(6-k)).
  std::string pairs;
  for (int k = 0; k < 6; ++k) {
    ProgramPair pair;
    pair.pair_id = "p:s:" + std::to_string(k);
    pair.problem_id = "p";
    pair.src_id = "s";
    pair.tgt_id = "t" + std::to_string(k);
    pair.src = "src";
    pair.tgt = "tgt" + std::to_string(k);
    pair.src_runtime = {100.0, PerfUnit::CostUnits};
    pair.tgt_runtime = {100.0 / (6 - k), PerfUnit::CostUnits};
    pair.relative_improvement = 1.0 - 1.0 / (6 - k);
    pairs += Json(pair).dump() + "\n";
  }
  write_file_atomic(dir / "pairs.jsonl", pairs);
  const auto result =
      run_tool({"dataset", "hq", "--pairs", (dir / "pairs.jsonl").string(),
                "--out", (dir / "hq.jsonl").string()});
  EXPECT_EQ(result.exit_code, 0) << result.err;
  const auto kept = read_jsonl(dir / "hq.jsonl", nullptr);
  ASSERT_EQ(kept.size(), 4u);
  for (const auto& row : kept) {
    EXPECT_GE(row.get<ProgramPair>().speedup(), 3.0);  // 6,5,4,3 kept
  }
  fs::remove_all(dir);
}

TEST(Cli, AuditDuplicatesFlagsTemplateCode) {
  const auto dir = temp_dir("dup");
  write_file_atomic(dir / "reported.json",
                    R"({"s01": 200.0, "s02": 82.0})" "\n");
  // s01/s02 in the fixture differ, so reuse one code text for both.
  std::string subs;
  for (const char* id : {"s01", "s02"}) {
    subs += Json{{"submission_id", id},     {"user_id", id},
                 {"problem_id", "p"},       {"timestamp", 1},
                 {"language", "cpp"},       {"status", "accepted"},
                 {"code", "int main() { return 0; }"}}
                .dump() +
            "\n";
  }
  write_file_atomic(dir / "subs.jsonl", subs);
  const auto result = run_tool(
      {"dataset", "audit-duplicates", "--submissions",
       (dir / "subs.jsonl").string(), "--reported",
       (dir / "reported.json").string(), "--out", (dir / "dup.json").string()});
  EXPECT_EQ(result.exit_code, 0) << result.err;
  const Json report = Json::parse(read_file(dir / "dup.json"));
  ASSERT_EQ(report.size(), 1u);
  EXPECT_NEAR(report[0].at("ratio").get<double>(), 2.44, 0.005);
  fs::remove_all(dir);
}

TEST(Cli, TagsAssignTenSolutionFixture) {
  const auto dir = temp_dir("tags");
  std::string solutions;
  for (int i = 0; i < 10; ++i) {
    solutions += Json{{"problem_id", "p"},
                      {"solution_id", "sol" + std::to_string(i)},
                      {"runtime", 10.0 * (i + 1)}}
                     .dump() +
                 "\n";
  }
  write_file_atomic(dir / "solutions.jsonl", solutions);
  const auto result = run_tool({"tags", "assign", "--solutions",
                                (dir / "solutions.jsonl").string(), "--out",
                                (dir / "tags.json").string()});
  EXPECT_EQ(result.exit_code, 0) << result.err;
  const Json tags = Json::parse(read_file(dir / "tags.json"));
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(tags.at("sol" + std::to_string(i)).get<int>(), 10 - i);
  }
  fs::remove_all(dir);
}

TEST(Cli, IndexBuildAndSelfQuery) {
  const auto dir = temp_dir("index");
  const auto pairs_path = build_fixture_dataset(dir / "ds");

  const auto build = run_tool({"index", "build", "--pairs",
                               pairs_path.string(), "--split", "all", "--out",
                               (dir / "index.bin").string()});
  EXPECT_EQ(build.exit_code, 0) << build.err;
  EXPECT_TRUE(fs::exists(dir / "index.bin"));
  EXPECT_TRUE(fs::exists(dir / "index.bin.meta.json"));

  // Querying with a corpus member's source ranks that member first.
  const auto rows = read_jsonl(pairs_path, nullptr);
  const auto member = rows[0].get<ProgramPair>();
  write_file_atomic(dir / "query.cpp", member.src);
  const auto query = run_tool({"index", "query", "--index",
                               (dir / "index.bin").string(), "--query-file",
                               (dir / "query.cpp").string(), "--k", "2"});
  EXPECT_EQ(query.exit_code, 0) << query.err;
  const auto first_line = query.out.substr(0, query.out.find('\n'));
  const Json hit = Json::parse(first_line);
  EXPECT_EQ(hit.at("pair_id").get<std::string>(), member.pair_id);
  fs::remove_all(dir);
}

TEST(Cli, EvalSplitFilterAndKMonotonicity) {
  const auto dir = temp_dir("evalk");
  const auto pairs_path = build_fixture_dataset(dir / "ds");

  const auto eval_at_k = [&](int k, const fs::path& out) {
    const auto result = run_tool(
        {"eval", "--pairs", pairs_path.string(), "--split", "all", "--k",
         std::to_string(k), "--offline", "--candidates",
         (kFixtures / "corpus" / "candidates.jsonl").string(), "--tests",
         (kFixtures / "corpus" / "tests").string(), "--backend", "manifest",
         "--manifest", (kFixtures / "corpus" / "manifest.json").string(),
         "--out", out.string()});
    EXPECT_EQ(result.exit_code, 0) << result.err;
    return Json::parse(read_file(out / "summary.json"));
  };
  const auto at_1 = eval_at_k(1, dir / "k1");
  const auto at_2 = eval_at_k(2, dir / "k2");
  EXPECT_GE(at_2.at("pct_opt").get<double>(),
            at_1.at("pct_opt").get<double>());
  EXPECT_GE(at_2.at("mean_speedup").get<double>(),
            at_1.at("mean_speedup").get<double>());
  // Sample 0 is a copy of the source, so k=1 is the self-candidate
  // baseline.
  EXPECT_DOUBLE_EQ(at_1.at("pct_opt").get<double>(), 0.0);
  EXPECT_DOUBLE_EQ(at_1.at("mean_speedup").get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(at_1.at("pct_correct").get<double>(), 1.0);

  // Split filtering selects a strict subset.
  const auto split_eval = run_tool(
      {"eval", "--pairs", pairs_path.string(), "--split", "test", "--k", "2",
       "--offline", "--candidates",
       (kFixtures / "corpus" / "candidates.jsonl").string(), "--tests",
       (kFixtures / "corpus" / "tests").string(), "--backend", "manifest",
       "--manifest", (kFixtures / "corpus" / "manifest.json").string(),
       "--out", (dir / "split").string()});
  EXPECT_EQ(split_eval.exit_code, 0) << split_eval.err;
  const auto rows = read_jsonl(dir / "split" / "eval_rows.jsonl", nullptr);
  EXPECT_LT(rows.size(), 4u);
  EXPECT_GE(rows.size(), 1u);
  fs::remove_all(dir);
}

TEST(Cli, EvalWithoutCandidatesOrEndpointFails) {
  const auto dir = temp_dir("evalnone");
  const auto pairs_path = build_fixture_dataset(dir / "ds");
  const auto result = run_tool(
      {"eval", "--pairs", pairs_path.string(), "--split", "all", "--tests",
       (kFixtures / "corpus" / "tests").string(), "--backend", "manifest",
       "--manifest", (kFixtures / "corpus" / "manifest.json").string(),
       "--out", (dir / "out").string()});
  EXPECT_EQ(result.exit_code, 1);
  fs::remove_all(dir);
}

TEST(Cli, SelfplayDedupeAndAssemble) {
  const auto dir = temp_dir("selfplay");

  const char* echo_std =
      "#include <iostream>\n#include <string>\nint main() { std::string "
      "line; while (std::getline(std::cin, line)) std::cout << line << "
      "\"\\n\"; }\n";
  const char* echo_cstdio =
      "#include <cstdio>\nint main() { int c; while ((c = getchar()) != "
      "EOF) putchar(c); }\n";
  const char* constant =
      "#include <iostream>\nint main() { std::cout << 42 << \"\\n\"; }\n";
  std::string programs;
  programs += Json{{"program_id", "gen-echo-a"}, {"code", echo_std}}.dump();
  programs += "\n";
  programs +=
      Json{{"program_id", "gen-echo-b"}, {"code", echo_cstdio}}.dump();
  programs += "\n";
  programs += Json{{"program_id", "gen-const"}, {"code", constant}}.dump();
  programs += "\n";
  write_file_atomic(dir / "programs.jsonl", programs);

  // The toolkit config supplies a faster compile command.
  write_file_atomic(
      dir / "config.json",
      R"({"version": 1, "compile": {"command": "g++ -std=c++17 -O0 {src} -o {out}"}})");

  const auto dedupe = run_tool(
      {"--config", (dir / "config.json").string(), "selfplay", "dedupe",
       "--programs", (dir / "programs.jsonl").string(), "--tests",
       (kFixtures / "corpus" / "tests").string(), "--out-signatures",
       (dir / "signatures.jsonl").string(), "--out-classes",
       (dir / "classes.json").string()});
  EXPECT_EQ(dedupe.exit_code, 0) << dedupe.err;

  // Classes are sorted by representative: gen-const first, then the two
  // behaviorally equivalent echo programs together.
  const Json classes = Json::parse(read_file(dir / "classes.json"));
  ASSERT_EQ(classes.size(), 2u);
  EXPECT_EQ(classes[0].at("representative"), "gen-const");
  EXPECT_EQ(classes[1].at("members").size(), 2u);
  EXPECT_EQ(classes[1].at("representative"), "gen-echo-a");

  // Novelty filter: a known corpus containing the echo behavior.
  const auto known_run = run_tool(
      {"--config", (dir / "config.json").string(), "selfplay", "dedupe",
       "--programs", (dir / "programs.jsonl").string(), "--tests",
       (kFixtures / "corpus" / "tests").string(), "--out-signatures",
       (dir / "known.jsonl").string(), "--out-classes",
       (dir / "known_classes.json").string()});
  EXPECT_EQ(known_run.exit_code, 0) << known_run.err;
  const auto novel_run = run_tool(
      {"--config", (dir / "config.json").string(), "selfplay", "dedupe",
       "--programs", (dir / "programs.jsonl").string(), "--tests",
       (kFixtures / "corpus" / "tests").string(), "--out-signatures",
       (dir / "sig2.jsonl").string(), "--out-classes",
       (dir / "cls2.json").string(), "--known",
       (dir / "known.jsonl").string(), "--out-novel",
       (dir / "novel.jsonl").string()});
  EXPECT_EQ(novel_run.exit_code, 0) << novel_run.err;
  EXPECT_TRUE(read_jsonl(dir / "novel.jsonl", nullptr).empty());

  // Assemble: class of five slow programs, candidates at 9..5.5x, cap 3.
  std::string class_json = R"([{"class_id": "C0000",
    "members": ["a", "b", "c", "d", "e"], "representative": "a"}])";
  write_file_atomic(dir / "assemble_classes.json", class_json);
  std::string candidates;
  const double speedups[] = {9, 8, 7, 6, 5.5};
  for (int i = 0; i < 5; ++i) {
    const std::string slow(1, static_cast<char>('a' + i));
    candidates +=
        Json{{"problem_id", "gen"},
             {"slow_id", slow},
             {"fast_id", slow + "1"},
             {"slow_src", "slow code"},
             {"fast_src", "fast code"},
             {"slow_runtime", Json{{"value", 100.0}, {"unit", "cost_units"}}},
             {"fast_runtime", Json{{"value", 100.0 / speedups[i]},
                                   {"unit", "cost_units"}}}}
            .dump() +
        "\n";
  }
  write_file_atomic(dir / "synth_candidates.jsonl", candidates);
  const auto assemble = run_tool(
      {"selfplay", "assemble", "--classes",
       (dir / "assemble_classes.json").string(), "--candidates",
       (dir / "synth_candidates.jsonl").string(), "--out",
       (dir / "synthetic_pairs.jsonl").string()});
  EXPECT_EQ(assemble.exit_code, 0) << assemble.err;
  const auto pairs = read_jsonl(dir / "synthetic_pairs.jsonl", nullptr);
  ASSERT_EQ(pairs.size(), 3u);
  for (const auto& row : pairs) {
    const auto pair = row.get<ProgramPair>();
    EXPECT_EQ(pair.provenance, Provenance::SelfPlay);
    EXPECT_GE(pair.speedup(), 7.0 - 1e-9);
  }
  fs::remove_all(dir);
}

TEST(Cli, OnlineEvalAgainstStubEndpointWithReplayCache) {
  const auto dir = temp_dir("online");
  const auto pairs_path = build_fixture_dataset(dir / "ds");

  // A stub generation endpoint returning two samples for any prompt; the
  // first is wrapped in prose + fences to exercise extraction.
  std::atomic<int> requests{0};
  httplib::Server server;
  server.Post("/generate", [&](const httplib::Request&,
                               httplib::Response& res) {
    ++requests;
    const Json body{
        {"samples",
         {"Use the closed form.\n```cpp\nint main() { return 0; }\n```\n",
          "int main() { return 1; }\n"}}};
    res.set_content(body.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  write_file_atomic(dir / "config.json",
                    Json{{"version", 1},
                         {"gen",
                          Json{{"cache_dir", (dir / "cache").string()},
                               {"max_retries", 1}}}}
                        .dump());

  const auto eval_once = [&](const fs::path& out) {
    return run_tool(
        {"--config", (dir / "config.json").string(), "eval", "--pairs",
         pairs_path.string(), "--split", "test", "--k", "2", "--style",
         "retrieval", "--endpoint",
         "http://127.0.0.1:" + std::to_string(port) + "/generate", "--tests",
         (kFixtures / "corpus" / "tests").string(), "--backend", "manifest",
         "--manifest", (kFixtures / "corpus" / "manifest.json").string(),
         "--out", out.string()});
  };

  const auto first = eval_once(dir / "eval1");
  ASSERT_EQ(first.exit_code, 0) << first.err;
  const int live_requests = requests.load();
  EXPECT_GT(live_requests, 0);

  // With seed 7, split "test" holds p001's two pairs; candidate runtimes
  // come from the manifest entries for <pair>#0 / <pair>#1.
  const Json summary = Json::parse(read_file(dir / "eval1" / "summary.json"));
  EXPECT_EQ(summary.at("n_rows").get<int>(), 2);
  EXPECT_DOUBLE_EQ(summary.at("pct_correct").get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(summary.at("pct_opt").get<double>(), 1.0);

  // Second run replays from the cache: no new requests reach the server.
  const auto second = eval_once(dir / "eval2");
  ASSERT_EQ(second.exit_code, 0) << second.err;
  EXPECT_EQ(requests.load(), live_requests);
  EXPECT_EQ(read_file(dir / "eval1" / "eval_rows.jsonl"),
            read_file(dir / "eval2" / "eval_rows.jsonl"));

  server.stop();
  server_thread.join();
  fs::remove_all(dir);
}

TEST(Cli, MetricsSummarizeRecomputesSummary) {
  const auto dir = temp_dir("summarize");
  const auto pairs_path = build_fixture_dataset(dir / "ds");
  const auto eval = run_tool(
      {"eval", "--pairs", pairs_path.string(), "--split", "all", "--k", "2",
       "--offline", "--candidates",
       (kFixtures / "corpus" / "candidates.jsonl").string(), "--tests",
       (kFixtures / "corpus" / "tests").string(), "--backend", "manifest",
       "--manifest", (kFixtures / "corpus" / "manifest.json").string(),
       "--out", (dir / "eval").string()});
  ASSERT_EQ(eval.exit_code, 0) << eval.err;

  const auto summarize = run_tool(
      {"metrics", "summarize", "--rows",
       (dir / "eval" / "eval_rows.jsonl").string(), "--k", "2", "--out",
       (dir / "summary2.json").string()});
  ASSERT_EQ(summarize.exit_code, 0) << summarize.err;

  const Json original = Json::parse(read_file(dir / "eval" / "summary.json"));
  const Json recomputed = Json::parse(read_file(dir / "summary2.json"));
  for (const char* key :
       {"pct_opt", "mean_speedup", "pct_correct", "geomean_speedup"}) {
    EXPECT_EQ(original.at(key), recomputed.at(key)) << key;
  }
  fs::remove_all(dir);
}

TEST(Cli, ConfigThresholdsApplyWhenFlagsAbsent) {
  const auto dir = temp_dir("cfgthresh");
  // A 30% pair filter drops the fixture's 0.15/0.20 improvements and
  // keeps only the two 0.50 ones.
  write_file_atomic(
      dir / "config.json",
      R"({"version": 1, "metrics": {"dataset_min_improvement": 0.3}})");
  const auto result = run_tool(
      {"--config", (dir / "config.json").string(), "dataset", "build",
       "--submissions",
       (kFixtures / "corpus" / "submissions.jsonl").string(), "--tests",
       (kFixtures / "corpus" / "tests").string(), "--out",
       (dir / "ds").string(), "--backend", "manifest", "--manifest",
       (kFixtures / "corpus" / "manifest.json").string(), "--ratios", "0.5",
       "0.5", "0.0"});
  EXPECT_EQ(result.exit_code, 2) << result.err;
  EXPECT_EQ(read_jsonl(dir / "ds" / "pairs.jsonl", nullptr).size(), 2u);

  // An explicit flag still wins over the config.
  const auto overridden = run_tool(
      {"--config", (dir / "config.json").string(), "dataset", "build",
       "--submissions",
       (kFixtures / "corpus" / "submissions.jsonl").string(), "--tests",
       (kFixtures / "corpus" / "tests").string(), "--out",
       (dir / "ds2").string(), "--backend", "manifest", "--manifest",
       (kFixtures / "corpus" / "manifest.json").string(), "--ratios", "0.5",
       "0.5", "0.0", "--min-improvement", "0.1"});
  EXPECT_EQ(overridden.exit_code, 2) << overridden.err;
  EXPECT_EQ(read_jsonl(dir / "ds2" / "pairs.jsonl", nullptr).size(), 4u);
  fs::remove_all(dir);
}

TEST(Cli, AuditVarianceRequiresPositivePairs) {
  const auto result = run_tool({"audit", "variance", "--mode",
                                "deterministic", "--pairs", "0", "--out",
                                "/tmp/unused-audit.json"});
  EXPECT_EQ(result.exit_code, 1);
}

TEST(Cli, ConfigUnknownKeyFailsLoudly) {
  const auto dir = temp_dir("badcfg");
  write_file_atomic(dir / "config.json", R"({"versionn": 1})");
  const auto result = run_tool({"--config", (dir / "config.json").string(),
                                "tags", "assign", "--solutions", "/none",
                                "--out", "/none"});
  EXPECT_EQ(result.exit_code, 1);
  EXPECT_NE(result.err.find("versionn"), std::string::npos);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace perfedit
