#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "perfedit/harness.hpp"
#include "perfedit/types.hpp"

namespace perfedit {

/// Behavioral fingerprint: the program's normalized stdout (or a Fail
/// marker for crash/timeout/nonzero exit) over a shared, ordered input set.
/// Signatures are only comparable when computed over the identical input
/// set, which inputs_digest pins down.
///
/// Cost: m executions per program for m shared inputs, after which grouping
/// is hash comparison. Pairwise differential testing of n programs would
/// cost O(n^2 * m) executions for the same partition.
struct OutputSignature {
  std::string program_id;
  std::vector<std::optional<std::string>> outputs;  // nullopt = Fail
  std::string inputs_digest;
  std::string hash;  // digest of the output list

  bool same_behavior(const OutputSignature& other) const;
};

/// Canonical digest over an ordered input set.
std::string digest_inputs(std::span<const std::string> inputs);

struct SignatureOptions {
  CompileConfig compile;
  RunLimits limits;
  int jobs = 1;
};

/// Compiles the program once and runs it on every input, recording
/// normalized stdout per input, or Fail. A program that does not compile
/// yields the all-Fail signature, which still participates in grouping.
OutputSignature output_signature(const std::string& program_id,
                                 const std::string& source,
                                 std::span<const std::string> inputs,
                                 const SignatureOptions& options = {});

struct EquivalenceClass {
  std::string class_id;
  std::vector<std::string> member_ids;  // sorted
  std::string representative;           // lexicographically smallest id
};

/// Partitions signatures by exact behavioral equality (hash first, full
/// output-list confirmation on collision). Classes come back sorted by
/// representative id.
std::vector<EquivalenceClass> group_equivalence(
    std::span<const OutputSignature> signatures);

/// Keeps the generated signatures whose behavior matches no known
/// signature. Throws std::invalid_argument when the two corpora were
/// computed over different input sets.
std::vector<OutputSignature> novelty_filter(
    std::span<const OutputSignature> generated,
    std::span<const OutputSignature> known);

/// One (slow, optimized) candidate from self-play generation, already
/// judged correct against the slow program's test outputs.
struct SyntheticCandidate {
  std::string problem_id;
  std::string slow_id;  // must appear in some equivalence class
  std::string fast_id;
  std::string slow_src;
  std::string fast_src;
  PerfMeasurement slow_runtime;
  PerfMeasurement fast_runtime;
};

/// Keeps candidates with speedup >= min_speedup (boundary included) and at
/// most max_per_class pairs per slow-program equivalence class, preferring
/// the highest speedups, ties by (slow_id, fast_id). Candidates whose
/// slow_id is in no class are rejected with std::invalid_argument.
std::vector<ProgramPair> assemble_synthetic_pairs(
    std::span<const EquivalenceClass> classes,
    std::span<const SyntheticCandidate> candidates,
    double min_speedup = 5.0, int max_per_class = 3);

void to_json(Json& j, const OutputSignature& sig);
void from_json(const Json& j, OutputSignature& sig);
void to_json(Json& j, const EquivalenceClass& cls);
void from_json(const Json& j, EquivalenceClass& cls);

}  // namespace perfedit
