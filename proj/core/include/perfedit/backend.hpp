#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>

#include "perfedit/result.hpp"
#include "perfedit/subprocess.hpp"
#include "perfedit/types.hpp"

namespace perfedit {

enum class MeasureErrorKind {
  Timeout,
  ProcessFailed,
  StatsKeyMissing,
  UnparsableStats,
  MissingEntry,
};

std::string to_string(MeasureErrorKind kind);

struct MeasureError {
  MeasureErrorKind kind;
  std::string detail;
};

struct MeasureRequest {
  std::string program_id;
  int test_index = 0;
  std::filesystem::path artifact;  // ignored by lookup backends
  std::string input;               // stdin bytes
  RunLimits limits;
};

using MeasureResult = Result<PerfMeasurement, MeasureError>;

/// Performance-measurement contract. Implementations must be safe for
/// concurrent measure() calls.
class PerfBackend {
 public:
  virtual ~PerfBackend() = default;

  virtual const BackendDescriptor& descriptor() const = 0;

  /// False when measure() never launches the artifact (manifest lookups,
  /// simulated noise). Pipelines skip compilation for such backends.
  virtual bool requires_artifact() const { return true; }

  virtual MeasureResult measure(const MeasureRequest& req) = 0;
};

// ---------------------------------------------------------------------------
// Manifest fixture backend

/// Deterministic table of per-test costs:
/// { "<program_id>": { "<test_index>": <number>, ... }, ... }
/// A program that fails test k is encoded by omitting entry k.
class ManifestBackend : public PerfBackend {
 public:
  explicit ManifestBackend(
      std::map<std::string, std::map<int, double>> entries);

  static ManifestBackend from_file(const std::filesystem::path& path);
  static ManifestBackend from_json(const Json& j);

  const BackendDescriptor& descriptor() const override { return descriptor_; }
  bool requires_artifact() const override { return false; }
  MeasureResult measure(const MeasureRequest& req) override;

  /// All test indices present for a program (empty when unknown).
  std::optional<std::map<int, double>> entries_for(
      const std::string& program_id) const;

 private:
  BackendDescriptor descriptor_{"manifest", /*deterministic=*/true,
                                PerfUnit::CostUnits};
  std::map<std::string, std::map<int, double>> entries_;
};

// ---------------------------------------------------------------------------
// External simulator driver

struct SimulatorConfig {
  /// Template with {binary}, {input} and {stats_out} placeholders.
  std::string command;
  std::string stats_key = "simSeconds";
  double timeout_s = 120.0;
  int max_parallel = 1;
  std::filesystem::path workdir;  // scratch space for stats/input files
};

/// Parses a gem5-style stats dump: one "key value [comment]" entry per line,
/// whitespace tolerant, first match wins.
Result<double, MeasureError> parse_stats_value(std::string_view stats_text,
                                               std::string_view key);

class SimulatorDriver : public PerfBackend {
 public:
  explicit SimulatorDriver(SimulatorConfig config);

  const BackendDescriptor& descriptor() const override { return descriptor_; }
  MeasureResult measure(const MeasureRequest& req) override;

 private:
  BackendDescriptor descriptor_{"simulator", /*deterministic=*/true,
                                PerfUnit::SimSeconds};
  SimulatorConfig config_;

  // Bounds concurrent simulator processes.
  std::mutex slots_mutex_;
  std::condition_variable slots_cv_;
  int slots_in_use_ = 0;

  std::atomic<std::uint64_t> scratch_counter_{0};
};

// ---------------------------------------------------------------------------
// Wall-clock backend

/// Multiplicative lognormal noise, exp(sigma * Z) with Z standard normal.
/// The stream is mt19937_64 seeded as given, mapped to normals with an
/// explicit Box-Muller transform, so the sequence does not depend on the
/// standard library's unspecified distribution algorithms.
class NoiseModel {
 public:
  NoiseModel(double sigma, std::uint64_t seed, double base_cost = 1.0);

  double sigma() const { return sigma_; }
  double base_cost() const { return base_cost_; }

  /// One noisy cost sample: base_cost * exp(sigma * Z).
  double sample();

 private:
  double sigma_;
  double base_cost_;
  std::mt19937_64 rng_;
};

/// Real mode runs the artifact and reports its wall time; one sample, no
/// averaging. Simulated mode never launches a process and exists to model
/// noisy benchmarking in tests and audits.
class WallClockBackend : public PerfBackend {
 public:
  WallClockBackend();  // real mode
  explicit WallClockBackend(NoiseModel noise);  // simulated mode

  const BackendDescriptor& descriptor() const override { return descriptor_; }
  bool requires_artifact() const override { return !simulated_; }
  MeasureResult measure(const MeasureRequest& req) override;

 private:
  BackendDescriptor descriptor_{"wallclock", /*deterministic=*/false,
                                PerfUnit::WallSeconds};
  bool simulated_ = false;
  std::optional<NoiseModel> noise_;
  std::mutex noise_mutex_;
};

}  // namespace perfedit
