#include "perfedit/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace perfedit {

double speedup(const PerfMeasurement& old_runtime,
               const PerfMeasurement& new_runtime) {
  if (old_runtime.unit != new_runtime.unit) {
    throw std::invalid_argument("speedup across units: " +
                                to_string(old_runtime.unit) + " vs " +
                                to_string(new_runtime.unit));
  }
  if (new_runtime.value <= 0.0) {
    throw std::invalid_argument("new runtime must be positive");
  }
  return old_runtime.value / new_runtime.value;
}

double clamped_speedup(const PerfMeasurement& old_runtime,
                       const Candidate& candidate) {
  if (!candidate.correct || !candidate.new_runtime) return 1.0;
  return std::max(1.0, speedup(old_runtime, *candidate.new_runtime));
}

std::optional<std::size_t> best_of_k(
    const std::vector<Candidate>& candidates) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (!c.correct || !c.new_runtime) continue;
    if (!best) {
      best = i;
      continue;
    }
    const auto& incumbent = candidates[*best];
    if (c.new_runtime->value < incumbent.new_runtime->value) {
      best = i;
    } else if (c.new_runtime->value == incumbent.new_runtime->value &&
               c.sample_index < incumbent.sample_index) {
      best = i;
    }
  }
  return best;
}

bool counted_optimized(const PerfMeasurement& old_runtime,
                       const Candidate& candidate, double threshold) {
  if (!candidate.correct || !candidate.new_runtime) return false;
  if (old_runtime.unit != candidate.new_runtime->unit) {
    throw std::invalid_argument("optimized check across units");
  }
  const double improvement =
      (old_runtime.value - candidate.new_runtime->value) / old_runtime.value;
  return improvement >= threshold;
}

EvalRow evaluate_row(std::string example_id, PerfMeasurement old_runtime,
                     std::vector<Candidate> candidates,
                     double opt_threshold) {
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              return a.sample_index < b.sample_index;
            });
  EvalRow row;
  row.example_id = std::move(example_id);
  row.old_runtime = old_runtime;
  row.candidates = std::move(candidates);
  const auto best = best_of_k(row.candidates);
  if (best) {
    const Candidate& chosen = row.candidates[*best];
    row.best = chosen.sample_index;
    row.clamped_speedup = clamped_speedup(old_runtime, chosen);
    row.counted_optimized =
        counted_optimized(old_runtime, chosen, opt_threshold);
  }
  return row;
}

EvalRow row_at_k(const EvalRow& row, int k, double opt_threshold) {
  std::vector<Candidate> kept;
  for (const auto& c : row.candidates) {
    if (c.sample_index < k) kept.push_back(c);
  }
  return evaluate_row(row.example_id, row.old_runtime, std::move(kept),
                      opt_threshold);
}

MetricsSummary aggregate(const std::vector<EvalRow>& rows, int k) {
  if (rows.empty()) {
    throw std::invalid_argument("aggregate over zero rows");
  }
  MetricsSummary summary;
  summary.k = k;
  summary.n_rows = rows.size();
  double sum = 0.0;
  double log_sum = 0.0;
  std::size_t optimized = 0;
  std::size_t correct = 0;
  for (const auto& row : rows) {
    sum += row.clamped_speedup;
    log_sum += std::log(row.clamped_speedup);
    optimized += row.counted_optimized ? 1 : 0;
    const bool any_correct =
        std::any_of(row.candidates.begin(), row.candidates.end(),
                    [](const Candidate& c) { return c.correct; });
    correct += any_correct ? 1 : 0;
  }
  const double n = static_cast<double>(rows.size());
  summary.pct_opt = static_cast<double>(optimized) / n;
  summary.mean_speedup = sum / n;
  summary.pct_correct = static_cast<double>(correct) / n;
  summary.geomean_speedup = std::exp(log_sum / n);
  return summary;
}

void to_json(Json& j, const Candidate& c) {
  j = Json{{"sample_index", c.sample_index},
           {"verdict", c.correct ? "correct" : "incorrect"}};
  if (c.new_runtime) j["new_runtime"] = *c.new_runtime;
}

void from_json(const Json& j, Candidate& c) {
  c.sample_index = j.at("sample_index").get<int>();
  const auto verdict = j.at("verdict").get<std::string>();
  if (verdict == "correct") {
    c.correct = true;
  } else if (verdict == "incorrect") {
    c.correct = false;
  } else {
    throw std::invalid_argument("unknown candidate verdict: " + verdict);
  }
  if (j.contains("new_runtime")) {
    c.new_runtime = j.at("new_runtime").get<PerfMeasurement>();
  }
}

void to_json(Json& j, const EvalRow& row) {
  j = Json{{"example_id", row.example_id},
           {"old_runtime", row.old_runtime},
           {"candidates", row.candidates},
           {"best", row.best ? Json(*row.best) : Json(nullptr)},
           {"clamped_speedup", row.clamped_speedup},
           {"counted_optimized", row.counted_optimized}};
}

void from_json(const Json& j, EvalRow& row) {
  row.example_id = j.at("example_id").get<std::string>();
  row.old_runtime = j.at("old_runtime").get<PerfMeasurement>();
  row.candidates = j.at("candidates").get<std::vector<Candidate>>();
  if (j.contains("best") && !j.at("best").is_null()) {
    row.best = j.at("best").get<int>();
  }
  row.clamped_speedup = j.at("clamped_speedup").get<double>();
  row.counted_optimized = j.at("counted_optimized").get<bool>();
}

void to_json(Json& j, const MetricsSummary& summary) {
  j = Json{{"pct_opt", summary.pct_opt},
           {"mean_speedup", summary.mean_speedup},
           {"pct_correct", summary.pct_correct},
           {"k", summary.k},
           {"geomean_speedup", summary.geomean_speedup},
           {"n_rows", summary.n_rows}};
}

}  // namespace perfedit
