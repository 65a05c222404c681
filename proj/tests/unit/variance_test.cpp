#include "perfedit/variance.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace perfedit {
namespace {

TEST(AuditIdenticalPairs, DeterministicBackendIsDegenerate) {
  ManifestBackend backend({{"probe", {{0, 3.7}}}});
  MeasureRequest probe;
  probe.program_id = "probe";
  const auto report = audit_identical_pairs(probe, 500, backend);
  EXPECT_EQ(report.n_pairs, 500);
  EXPECT_EQ(report.n_failed, 0);
  EXPECT_DOUBLE_EQ(report.mean_ratio, 1.0);
  EXPECT_DOUBLE_EQ(report.std_ratio, 0.0);
  EXPECT_DOUBLE_EQ(report.quantiles.at(0.5), 1.0);
  EXPECT_DOUBLE_EQ(report.quantiles.at(0.95), 1.0);
  EXPECT_DOUBLE_EQ(report.quantiles.at(0.99), 1.0);
}

TEST(AuditIdenticalPairs, SigmaZeroNoiseIsAllOnes) {
  WallClockBackend backend(NoiseModel(0.0, 77));
  const auto report = audit_identical_pairs({}, 500, backend);
  for (double r : report.ratios) EXPECT_DOUBLE_EQ(r, 1.0);
}

TEST(AuditIdenticalPairs, CalibratedNoiseShowsPhantomSpeedups) {
  // Lognormal noise calibrated to a 1.12x mean phantom speedup; the upper
  // tail fattens the way noisy benchmarking does.
  const double sigma = calibrate_noise(1.12);
  WallClockBackend backend(NoiseModel(sigma, 20240810));
  const auto report = audit_identical_pairs({}, 500, backend);
  EXPECT_EQ(report.n_pairs, 500);
  EXPECT_GT(report.mean_ratio, 1.05);
  EXPECT_LT(report.mean_ratio, 1.20);
  EXPECT_GE(report.quantiles.at(0.95), 1.5);
  EXPECT_LE(report.quantiles.at(0.95), 2.4);
}

TEST(AuditIdenticalPairs, MedianNearOneRegardlessOfSigma) {
  for (double sigma : {0.1, 0.3365, 0.8}) {
    WallClockBackend backend(NoiseModel(sigma, 99));
    const auto report = audit_identical_pairs({}, 2000, backend);
    EXPECT_NEAR(report.quantiles.at(0.5), 1.0, 0.08) << "sigma " << sigma;
  }
}

TEST(AuditIdenticalPairs, SeededRunsAreIdentical) {
  WallClockBackend a(NoiseModel(0.4, 5));
  WallClockBackend b(NoiseModel(0.4, 5));
  const auto ra = audit_identical_pairs({}, 50, a);
  const auto rb = audit_identical_pairs({}, 50, b);
  EXPECT_EQ(ra.ratios, rb.ratios);
}

TEST(AuditIdenticalPairs, FailedPairsExcludedAndCounted) {
  class FlakyBackend : public PerfBackend {
   public:
    const BackendDescriptor& descriptor() const override {
      return descriptor_;
    }
    MeasureResult measure(const MeasureRequest&) override {
      if (++calls_ % 10 == 0) {
        return MeasureError{MeasureErrorKind::ProcessFailed, "flake"};
      }
      return PerfMeasurement{1.0, PerfUnit::CostUnits};
    }

   private:
    BackendDescriptor descriptor_{"flaky", false, PerfUnit::CostUnits};
    int calls_ = 0;
  } backend;
  const auto report = audit_identical_pairs({}, 100, backend);
  EXPECT_GT(report.n_failed, 0);
  EXPECT_EQ(report.n_pairs + report.n_failed, 100);
}

TEST(AuditIdenticalPairs, RequiresAtLeastOnePair) {
  ManifestBackend backend({{"probe", {{0, 1.0}}}});
  EXPECT_THROW(audit_identical_pairs({}, 0, backend), std::invalid_argument);
}

TEST(Quantile, LinearInterpolation) {
  const std::vector<double> values = {1.0, 2.0, 3.0, 4.0};
  EXPECT_DOUBLE_EQ(quantile(values, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile(values, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(quantile(values, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile({5.0}, 0.95), 5.0);
}

TEST(CalibrateNoise, ClosedFormTarget) {
  // E[ratio] = exp(sigma^2) for the ratio of two i.i.d. lognormal samples,
  // so the 1.12 target lands at sqrt(ln 1.12).
  const double sigma = calibrate_noise(1.12);
  EXPECT_NEAR(sigma, 0.3366432611935122, 1e-6);
  EXPECT_NEAR(std::exp(sigma * sigma), 1.12, 1e-9);
}

TEST(CalibrateNoise, TargetOneGivesZeroSigma) {
  EXPECT_NEAR(calibrate_noise(1.0), 0.0, 1e-4);
}

TEST(CalibrateNoise, SubUnitTargetIsImpossible) {
  EXPECT_THROW(calibrate_noise(0.9), std::invalid_argument);
}

TEST(AuditReport, JsonAndCsvOutputs) {
  ManifestBackend backend({{"probe", {{0, 2.0}}}});
  MeasureRequest probe;
  probe.program_id = "probe";
  const auto report = audit_identical_pairs(probe, 3, backend);
  const Json j = audit_report_to_json(report);
  EXPECT_EQ(j.at("n_pairs"), 3);
  EXPECT_DOUBLE_EQ(j.at("quantiles").at("0.95").get<double>(), 1.0);
  EXPECT_EQ(j.at("backend").at("name"), "manifest");

  const std::string csv = audit_ratios_csv(report);
  EXPECT_EQ(csv, "pair,ratio\n0,1.0\n1,1.0\n2,1.0\n");
}

}  // namespace
}  // namespace perfedit
