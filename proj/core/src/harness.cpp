#include "perfedit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "perfedit/hash.hpp"
#include "perfedit/jsonl.hpp"

namespace perfedit {

namespace fs = std::filesystem;

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass:
      return "pass";
    case Verdict::WrongAnswer:
      return "wrong_answer";
    case Verdict::RuntimeError:
      return "runtime_error";
    case Verdict::Timeout:
      return "timeout";
  }
  throw std::logic_error("unreachable Verdict");
}

Result<CompiledArtifact, CompileError> compile(const std::string& source,
                                               const CompileConfig& cfg,
                                               const fs::path& workdir) {
  fs::create_directories(workdir);
  const std::string stem = "prog_" + sha256_hex(source).substr(0, 16);
  const fs::path src_path = workdir / (stem + ".cpp");
  const fs::path out_path = workdir / (stem + ".bin");
  write_file_atomic(src_path, source);

  auto argv = substitute_placeholders(split_command(cfg.compiler_command),
                                      {{"src", src_path.string()},
                                       {"out", out_path.string()}});
  argv.insert(argv.end(), cfg.flags.begin(), cfg.flags.end());

  RunLimits limits;
  limits.wall_timeout_s = cfg.timeout_s;
  const RunResult run = run_process(argv, "", limits);

  if (run.timed_out) {
    return CompileError{CompileErrorKind::Timeout, run.err};
  }
  if (!run.exited || run.exit_code != 0) {
    std::string stderr_text = run.err;
    if (stderr_text.empty()) {
      stderr_text = run.exited
                        ? "compiler exit code " + std::to_string(run.exit_code)
                        : "compiler killed by signal " +
                              std::to_string(run.term_signal);
    }
    return CompileError{CompileErrorKind::Failed, std::move(stderr_text)};
  }
  return CompiledArtifact{out_path, run.err};
}

namespace {

struct TestOutcome {
  Verdict verdict = Verdict::RuntimeError;
  std::optional<PerfMeasurement> measurement;
  std::string diagnostic;
  std::string raw_stdout;
  std::string raw_stderr;
};

TestOutcome execute_one(const fs::path& artifact, const TestCase& test,
                        const RunLimits& limits, PerfBackend& backend,
                        const std::string& program_id) {
  TestOutcome outcome;
  const RunResult run = run_process({artifact.string()}, test.input, limits);
  outcome.raw_stdout = run.out;
  outcome.raw_stderr = run.err;

  if (run.timed_out) {
    outcome.verdict = Verdict::Timeout;
    outcome.diagnostic = "wall timeout";
    return outcome;
  }
  if (run.output_truncated) {
    outcome.verdict = Verdict::RuntimeError;
    outcome.diagnostic = "output exceeded cap";
    return outcome;
  }
  if (!run.exited || run.exit_code != 0) {
    outcome.verdict = Verdict::RuntimeError;
    outcome.diagnostic =
        run.exited ? "exit code " + std::to_string(run.exit_code)
                   : "killed by signal " + std::to_string(run.term_signal);
    return outcome;
  }
  if (normalize_output(run.out) != normalize_output(test.expected_output)) {
    outcome.verdict = Verdict::WrongAnswer;
    return outcome;
  }

  MeasureRequest req;
  req.program_id = program_id;
  req.test_index = test.index;
  req.artifact = artifact;
  req.input = test.input;
  req.limits = limits;
  auto measured = backend.measure(req);
  if (!measured.ok()) {
    outcome.verdict = Verdict::RuntimeError;
    outcome.diagnostic = "measurement failed (" +
                         to_string(measured.error().kind) +
                         "): " + measured.error().detail;
    return outcome;
  }
  outcome.verdict = Verdict::Pass;
  outcome.measurement = measured.value();
  return outcome;
}

void persist_outcome(const fs::path& root, const std::string& program_id,
                     int test_index, const TestOutcome& outcome) {
  const fs::path dir = root / program_id / std::to_string(test_index);
  fs::create_directories(dir);
  write_file_atomic(dir / "stdout.txt", outcome.raw_stdout);
  write_file_atomic(dir / "stderr.txt", outcome.raw_stderr);
  Json meta{{"verdict", to_string(outcome.verdict)}};
  if (outcome.measurement) meta["measurement"] = *outcome.measurement;
  if (!outcome.diagnostic.empty()) meta["diagnostic"] = outcome.diagnostic;
  write_file_atomic(dir / "result.json", meta.dump(2) + "\n");
}

}  // namespace

RunReport run_tests(const fs::path& artifact,
                    const std::vector<TestCase>& suite,
                    const RunLimits& limits, PerfBackend& backend,
                    const RunOptions& options) {
  if (suite.empty()) {
    throw std::invalid_argument("run_tests requires a nonempty suite");
  }
  RunReport report;
  report.program_id = options.program_id;

  std::vector<TestOutcome> outcomes(suite.size());
  if (options.fail_fast || options.jobs <= 1) {
    for (std::size_t i = 0; i < suite.size(); ++i) {
      outcomes[i] = execute_one(artifact, suite[i], limits, backend,
                                options.program_id);
      if (options.fail_fast && outcomes[i].verdict != Verdict::Pass) {
        outcomes.resize(i + 1);
        break;
      }
    }
  } else {
    // Results are merged by test index, so the report does not depend on
    // completion order.
    std::atomic<std::size_t> next{0};
    const int jobs =
        std::min<int>(options.jobs, static_cast<int>(suite.size()));
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= suite.size()) return;
          outcomes[i] = execute_one(artifact, suite[i], limits, backend,
                                    options.program_id);
        }
      });
    }
    for (auto& t : workers) t.join();
  }

  bool all_pass = !outcomes.empty();
  std::vector<PerfMeasurement> parts;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    report.verdicts.push_back(o.verdict);
    report.measurements.push_back(o.measurement);
    report.diagnostics.push_back(o.diagnostic);
    if (o.verdict == Verdict::Pass) {
      parts.push_back(*o.measurement);
    } else {
      all_pass = false;
    }
    if (options.persist_dir) {
      persist_outcome(*options.persist_dir, options.program_id,
                      suite[i].index, o);
    }
  }
  if (all_pass && outcomes.size() == suite.size()) {
    report.total_runtime = sum_measurements(parts);
  }
  return report;
}

Judgement judge(const RunReport& report) {
  if (!report.compile_ok) return Judgement::Incorrect;
  for (Verdict v : report.verdicts) {
    if (v != Verdict::Pass) return Judgement::Incorrect;
  }
  return Judgement::Correct;
}

std::string normalize_output(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  std::size_t line_start = 0;
  while (line_start <= raw.size()) {
    const std::size_t eol = raw.find('\n', line_start);
    const std::size_t line_end =
        (eol == std::string_view::npos) ? raw.size() : eol;
    std::size_t trimmed_end = line_end;
    while (trimmed_end > line_start) {
      const char c = raw[trimmed_end - 1];
      if (c == ' ' || c == '\t' || c == '\r') {
        --trimmed_end;
      } else {
        break;
      }
    }
    out.append(raw.substr(line_start, trimmed_end - line_start));
    if (eol == std::string_view::npos) break;
    out.push_back('\n');
    line_start = eol + 1;
  }
  while (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

RunReport compile_failure_report(const std::string& program_id,
                                 const CompileError& error) {
  RunReport report;
  report.program_id = program_id;
  report.compile_ok = false;
  report.compile_stderr = error.stderr_text;
  return report;
}

std::vector<TestCase> load_test_suite(const fs::path& dir) {
  std::vector<TestCase> suite;
  for (int k = 0;; ++k) {
    const fs::path input = dir / ("input." + std::to_string(k) + ".txt");
    const fs::path output = dir / ("output." + std::to_string(k) + ".txt");
    if (!fs::exists(input)) break;
    if (!fs::exists(output)) {
      throw std::runtime_error("test suite " + dir.string() +
                               " has input." + std::to_string(k) +
                               ".txt but no matching output file");
    }
    suite.push_back({k, read_file(input), read_file(output)});
  }
  return suite;
}

}  // namespace perfedit
