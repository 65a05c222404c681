#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace perfedit {

/// All serialized output goes through ordered_json so that field order is
/// insertion order and two runs over the same data emit identical bytes.
using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Measurements

enum class PerfUnit { SimSeconds, CostUnits, WallSeconds };

std::string to_string(PerfUnit unit);
PerfUnit perf_unit_from_string(const std::string& s);

/// One deterministic scalar cost from a backend. Values are strictly
/// positive; aggregating across units is a hard error.
struct PerfMeasurement {
  double value = 0.0;
  PerfUnit unit = PerfUnit::CostUnits;

  friend bool operator==(const PerfMeasurement&,
                         const PerfMeasurement&) = default;
};

/// Sum of measurements. Throws std::invalid_argument on unit mismatch.
PerfMeasurement sum_measurements(const std::vector<PerfMeasurement>& parts);

struct BackendDescriptor {
  std::string name;
  bool deterministic = false;
  PerfUnit unit = PerfUnit::CostUnits;
};

// ---------------------------------------------------------------------------
// Submission corpus

enum class SubmissionStatus { Accepted, Rejected };

/// One judged entry in a submission log.
struct Submission {
  std::string submission_id;
  std::string user_id;
  std::string problem_id;
  std::int64_t timestamp = 0;  // epoch seconds, >= 0
  std::string language;
  SubmissionStatus status = SubmissionStatus::Rejected;
  std::string code;
};

/// A user's accepted submissions for one problem, ordered by
/// (timestamp, submission_id) ascending.
struct Trajectory {
  std::string user_id;
  std::string problem_id;
  std::vector<Submission> programs;
};

enum class Split { Train, Val, Test, Unassigned };

std::string to_string(Split split);
Split split_from_string(const std::string& s);

enum class Provenance { Human, SelfPlay };

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

/// A (slow, fast) source pair with deterministic runtimes.
struct ProgramPair {
  std::string pair_id;
  std::string problem_id;
  std::string src_id;
  std::string tgt_id;
  std::string src;
  std::string tgt;
  PerfMeasurement src_runtime;
  PerfMeasurement tgt_runtime;
  double relative_improvement = 0.0;  // (src - tgt) / src, in (0, 1]
  Split split = Split::Unassigned;
  Provenance provenance = Provenance::Human;
  std::optional<std::string> class_id;  // set for self-play pairs

  double speedup() const { return src_runtime.value / tgt_runtime.value; }
};

// ---------------------------------------------------------------------------
// Test suites

struct TestCase {
  int index = 0;
  std::string input;
  std::string expected_output;
};

// ---------------------------------------------------------------------------
// Record-level rejects (malformed input, unmeasurable programs). Collected,
// never fatal to a batch.

struct Reject {
  std::string stage;  // "parse", "relabel", ...
  std::string id;     // submission id or input locator (e.g. "line 7")
  std::string reason;
};

// ---------------------------------------------------------------------------
// JSON mapping

void to_json(Json& j, const PerfMeasurement& m);
void from_json(const Json& j, PerfMeasurement& m);

void to_json(Json& j, const BackendDescriptor& d);
void from_json(const Json& j, BackendDescriptor& d);

void to_json(Json& j, const Submission& s);
/// Throws Json::exception or std::invalid_argument on missing/ill-typed
/// fields; callers in the pipeline catch per record and emit a Reject.
void from_json(const Json& j, Submission& s);

void to_json(Json& j, const ProgramPair& p);
void from_json(const Json& j, ProgramPair& p);

void to_json(Json& j, const Reject& r);
void from_json(const Json& j, Reject& r);

}  // namespace perfedit
