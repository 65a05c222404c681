#pragma once

#include <optional>
#include <string>
#include <vector>

#include "perfedit/types.hpp"

namespace perfedit {

struct Candidate {
  int sample_index = 0;
  bool correct = false;
  std::optional<PerfMeasurement> new_runtime;  // present when correct
};

struct EvalRow {
  std::string example_id;
  PerfMeasurement old_runtime;
  std::vector<Candidate> candidates;  // ascending sample_index
  std::optional<int> best;            // sample_index of the chosen candidate
  double clamped_speedup = 1.0;
  bool counted_optimized = false;
};

struct MetricsSummary {
  double pct_opt = 0.0;
  double mean_speedup = 1.0;
  double pct_correct = 0.0;
  int k = 0;
  // Secondary statistic; the headline mean above is the arithmetic mean of
  // clamped per-example speedups.
  double geomean_speedup = 1.0;
  std::size_t n_rows = 0;
};

/// Raw ratio old/new. Throws on unit mismatch or non-positive new runtime.
double speedup(const PerfMeasurement& old_runtime,
               const PerfMeasurement& new_runtime);

/// old/new clamped below at 1.0; incorrect candidates and candidates slower
/// than the original both count as 1.0.
double clamped_speedup(const PerfMeasurement& old_runtime,
                       const Candidate& candidate);

/// Index (into candidates) of the correct candidate with minimal runtime;
/// ties go to the lowest sample_index; absent when nothing is correct.
std::optional<std::size_t> best_of_k(const std::vector<Candidate>& candidates);

/// True iff the candidate is correct and at least `threshold` relatively
/// faster: (o - n) / o >= threshold. The boundary counts.
bool counted_optimized(const PerfMeasurement& old_runtime,
                       const Candidate& candidate, double threshold = 0.10);

/// Builds a finalized row: selects the best candidate and fills the derived
/// fields. Candidates are sorted by sample_index.
EvalRow evaluate_row(std::string example_id, PerfMeasurement old_runtime,
                     std::vector<Candidate> candidates,
                     double opt_threshold = 0.10);

/// Re-evaluates a row using only the candidates with sample_index < k.
EvalRow row_at_k(const EvalRow& row, int k, double opt_threshold = 0.10);

/// Corpus-level metrics over finalized rows. Throws std::invalid_argument
/// on empty input.
MetricsSummary aggregate(const std::vector<EvalRow>& rows, int k);

void to_json(Json& j, const Candidate& c);
void from_json(const Json& j, Candidate& c);
void to_json(Json& j, const EvalRow& row);
void from_json(const Json& j, EvalRow& row);
void to_json(Json& j, const MetricsSummary& summary);

}  // namespace perfedit
