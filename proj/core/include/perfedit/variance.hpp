#pragma once

#include <map>
#include <vector>

#include "perfedit/backend.hpp"
#include "perfedit/types.hpp"

namespace perfedit {

/// Phantom-speedup statistics for pairs of measurements of one identical
/// program. A deterministic backend yields the degenerate report (all
/// ratios exactly 1); a noisy one yields an inflated mean and a fat upper
/// tail.
struct AuditReport {
  int n_pairs = 0;   // pairs that produced a ratio
  int n_failed = 0;  // pairs excluded because a measurement failed
  double mean_ratio = 0.0;
  double std_ratio = 0.0;  // sample standard deviation (n-1)
  std::map<double, double> quantiles;  // p in {0.5, 0.95, 0.99}
  BackendDescriptor backend;
  std::vector<double> ratios;  // raw first/second ratios, in draw order
};

/// Benchmarks n_pairs (slow, fast) pairs where both sides are the same
/// program: draws two measurements per pair and records first/second.
AuditReport audit_identical_pairs(const MeasureRequest& probe, int n_pairs,
                                  PerfBackend& backend);

/// Empirical quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double p);

/// Finds the lognormal sigma whose two-sample ratio mean E[ratio] =
/// exp(sigma^2) matches the target, by bisection. Throws when the target
/// is below 1 (a ratio of i.i.d. positives cannot average below 1).
double calibrate_noise(double target_mean_ratio, double tolerance = 1e-9);

Json audit_report_to_json(const AuditReport& report);

std::string audit_ratios_csv(const AuditReport& report);

}  // namespace perfedit
