#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "perfedit/backend.hpp"
#include "perfedit/harness.hpp"
#include "perfedit/types.hpp"

namespace perfedit {

// ---------------------------------------------------------------------------
// Trajectories

struct TrajectoryBuild {
  std::vector<Trajectory> trajectories;  // ordered by (user_id, problem_id)
  std::vector<Reject> rejects;
};

/// Groups accepted submissions by (user, problem) into trajectories ordered
/// by (timestamp, submission_id). Rejected submissions are dropped silently;
/// they are not errors.
TrajectoryBuild build_trajectories(std::vector<Submission> submissions);

// ---------------------------------------------------------------------------
// Pair extraction

/// Emits every ordered pair (y_i, y_j), i < j, of the trajectory whose
/// relative improvement (r_i - r_j) / r_i strictly exceeds min_improvement.
/// A pair sitting exactly on the threshold is excluded. Throws
/// std::invalid_argument naming the program when a runtime is missing or
/// non-positive.
std::vector<ProgramPair> make_pairs(
    const Trajectory& traj,
    const std::map<std::string, PerfMeasurement>& runtimes,
    double min_improvement = 0.10);

// ---------------------------------------------------------------------------
// Runtime relabeling

struct RelabelOptions {
  CompileConfig compile;
  RunLimits limits;
  int jobs = 1;
};

struct RelabelResult {
  std::map<std::string, PerfMeasurement> runtimes;  // submission_id -> total
  std::vector<Reject> unmeasurable;
};

/// Assigns each program the sum of its per-test measurements over the full
/// suite. Programs that fail to compile, fail a test, or time out become
/// Unmeasurable rejects and get no runtime. For lookup backends (manifest)
/// nothing is executed: a missing entry for any suite index marks the
/// program Unmeasurable.
RelabelResult relabel_runtimes(const std::vector<Submission>& programs,
                               const std::vector<TestCase>& tests,
                               PerfBackend& backend,
                               const RelabelOptions& options = {});

// ---------------------------------------------------------------------------
// Splits

struct SplitAssignment {
  std::map<std::string, Split> by_problem;
  std::uint64_t seed = 0;
  std::array<double, 3> ratios{0.8, 0.1, 0.1};  // train, val, test
};

/// Shuffles the problem set with a seeded deterministic PRNG (mt19937_64 +
/// Fisher-Yates over the sorted id list) and partitions it by ratio with
/// largest-remainder rounding over problem counts. Ratios must sum to 1
/// within 1e-9; there must be at least as many problems as nonzero-ratio
/// splits. Every pair inherits its problem's split.
SplitAssignment split_by_problem(const std::vector<ProgramPair>& pairs,
                                 const std::array<double, 3>& ratios,
                                 std::uint64_t seed);

void apply_split(std::vector<ProgramPair>& pairs,
                 const SplitAssignment& assignment);

Json split_assignment_to_json(const SplitAssignment& assignment);

// ---------------------------------------------------------------------------
// High-quality subset

/// Per problem, keeps the max_per_problem pairs with the highest speedup;
/// ties broken by (src hash, tgt hash) lexicographically so the subset is
/// deterministic.
std::vector<ProgramPair> build_hq_subset(std::vector<ProgramPair> pairs,
                                         int max_per_problem = 4);

// ---------------------------------------------------------------------------
// Duplicate-code runtime audit

struct DuplicateRuntimeGroup {
  std::string code_hash;  // hash of the whitespace-normalized code
  double min_reported = 0.0;
  double max_reported = 0.0;
  double ratio = 1.0;
  std::vector<std::string> submission_ids;
};

/// Collapses runs of spaces/tabs, strips trailing whitespace per line,
/// keeps newlines.
std::string normalize_code_whitespace(std::string_view code);

/// Groups byte-identical (whitespace-normalized) code and reports groups
/// whose reported runtimes disagree by more than max/min > threshold.
/// Such disagreement on identical code is the case for relabeling.
std::vector<DuplicateRuntimeGroup> audit_duplicate_runtime_inconsistency(
    const std::vector<Submission>& submissions,
    const std::map<std::string, double>& reported_runtimes,
    double threshold = 1.1);

}  // namespace perfedit
