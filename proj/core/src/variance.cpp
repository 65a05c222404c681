#include "perfedit/variance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace perfedit {

AuditReport audit_identical_pairs(const MeasureRequest& probe, int n_pairs,
                                  PerfBackend& backend) {
  if (n_pairs < 1) {
    throw std::invalid_argument("audit requires n_pairs >= 1");
  }
  AuditReport report;
  report.backend = backend.descriptor();
  for (int i = 0; i < n_pairs; ++i) {
    auto first = backend.measure(probe);
    auto second = backend.measure(probe);
    if (!first.ok() || !second.ok()) {
      ++report.n_failed;
      continue;
    }
    report.ratios.push_back(first.value().value / second.value().value);
  }
  report.n_pairs = static_cast<int>(report.ratios.size());
  if (report.n_pairs == 0) {
    throw std::runtime_error("all audit pairs failed to measure");
  }

  double sum = 0.0;
  for (double r : report.ratios) sum += r;
  report.mean_ratio = sum / report.n_pairs;
  double sq = 0.0;
  for (double r : report.ratios) {
    sq += (r - report.mean_ratio) * (r - report.mean_ratio);
  }
  report.std_ratio =
      report.n_pairs > 1 ? std::sqrt(sq / (report.n_pairs - 1)) : 0.0;
  for (double p : {0.5, 0.95, 0.99}) {
    report.quantiles[p] = quantile(report.ratios, p);
  }
  return report;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) {
    throw std::invalid_argument("quantile of empty sample");
  }
  if (p < 0.0 || p > 1.0) {
    throw std::invalid_argument("quantile probability out of [0,1]");
  }
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double calibrate_noise(double target_mean_ratio, double tolerance) {
  if (target_mean_ratio < 1.0) {
    throw std::invalid_argument(
        "mean ratio of i.i.d. measurements cannot be below 1");
  }
  const auto mean_for = [](double sigma) { return std::exp(sigma * sigma); };

  double lo = 0.0;
  double hi = 1.0;
  while (mean_for(hi) < target_mean_ratio) {
    hi *= 2.0;
    if (hi > 64.0) {
      throw std::invalid_argument("unattainable target mean ratio");
    }
  }
  double mid = lo;
  for (int iter = 0; iter < 200; ++iter) {
    mid = 0.5 * (lo + hi);
    const double mean = mean_for(mid);
    if (std::abs(mean - target_mean_ratio) <= tolerance) return mid;
    if (mean < target_mean_ratio) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return mid;
}

Json audit_report_to_json(const AuditReport& report) {
  Json quantiles = Json::object();
  for (const auto& [p, value] : report.quantiles) {
    char key[16];
    std::snprintf(key, sizeof key, "%g", p);
    quantiles[key] = value;
  }
  return Json{{"n_pairs", report.n_pairs},
              {"n_failed", report.n_failed},
              {"mean_ratio", report.mean_ratio},
              {"std_ratio", report.std_ratio},
              {"quantiles", quantiles},
              {"backend", report.backend}};
}

std::string audit_ratios_csv(const AuditReport& report) {
  std::string csv = "pair,ratio\n";
  for (std::size_t i = 0; i < report.ratios.size(); ++i) {
    csv += std::to_string(i) + "," + Json(report.ratios[i]).dump() + "\n";
  }
  return csv;
}

}  // namespace perfedit
