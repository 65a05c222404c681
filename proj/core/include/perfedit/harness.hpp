#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "perfedit/backend.hpp"
#include "perfedit/result.hpp"
#include "perfedit/subprocess.hpp"
#include "perfedit/types.hpp"

namespace perfedit {

// ---------------------------------------------------------------------------
// Compilation

struct CompileConfig {
  /// Template with {src} and {out} placeholders.
  std::string compiler_command = "g++ -std=c++17 -O3 {src} -o {out}";
  std::vector<std::string> flags;  // appended to the expanded command
  double timeout_s = 60.0;
};

enum class CompileErrorKind { Failed, Timeout };

struct CompileError {
  CompileErrorKind kind;
  std::string stderr_text;
};

struct CompiledArtifact {
  std::filesystem::path path;
  std::string stderr_text;  // compiler warnings, captured on success too
};

/// Compiles source text inside workdir. Artifact and source file names are
/// derived from the source hash so concurrent compiles never collide.
Result<CompiledArtifact, CompileError> compile(const std::string& source,
                                               const CompileConfig& cfg,
                                               const std::filesystem::path&
                                                   workdir);

// ---------------------------------------------------------------------------
// Test execution

enum class Verdict { Pass, WrongAnswer, RuntimeError, Timeout };

std::string to_string(Verdict v);

struct RunReport {
  std::string program_id;
  bool compile_ok = true;
  std::string compile_stderr;
  std::vector<Verdict> verdicts;  // one per attempted test, by index
  std::vector<std::optional<PerfMeasurement>> measurements;
  std::vector<std::string> diagnostics;  // nonempty only for failures
  std::optional<PerfMeasurement> total_runtime;  // sum, present iff all Pass
};

struct RunOptions {
  std::string program_id;
  bool fail_fast = false;  // forces sequential execution
  int jobs = 1;
  /// When set, per-test stdout/stderr/measurement are persisted under
  /// <persist_dir>/<program_id>/<test_index>/.
  std::optional<std::filesystem::path> persist_dir;
};

/// Runs the artifact against a test suite. Verdict is Pass iff the process
/// exits 0 within limits and normalized stdout equals the normalized
/// expected output. Measurements are taken via the backend for passing
/// tests only; a backend failure demotes the verdict to RuntimeError with
/// the diagnostic attached, never a silent Pass.
RunReport run_tests(const std::filesystem::path& artifact,
                    const std::vector<TestCase>& suite,
                    const RunLimits& limits, PerfBackend& backend,
                    const RunOptions& options = {});

enum class Judgement { Correct, Incorrect };

/// Correct iff the program compiled and every verdict is Pass; a single
/// failing test rejects the program.
Judgement judge(const RunReport& report);

/// Strips trailing spaces/tabs/CR from every line, then trailing newlines
/// from the whole text. Comparison of normalized outputs is byte equality.
std::string normalize_output(std::string_view raw);

/// Makes a compile-failure report (no verdicts) for pipelines.
RunReport compile_failure_report(const std::string& program_id,
                                 const CompileError& error);

// ---------------------------------------------------------------------------
// Suites on disk: tests/<problem_id>/input.<k>.txt + output.<k>.txt,
// k contiguous from 0.

std::vector<TestCase> load_test_suite(const std::filesystem::path& dir);

}  // namespace perfedit
