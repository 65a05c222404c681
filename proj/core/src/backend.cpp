#include "perfedit/backend.hpp"

#include <unistd.h>

#include <cmath>
#include <numbers>

#include "perfedit/jsonl.hpp"

namespace perfedit {

namespace fs = std::filesystem;

std::string to_string(MeasureErrorKind kind) {
  switch (kind) {
    case MeasureErrorKind::Timeout:
      return "timeout";
    case MeasureErrorKind::ProcessFailed:
      return "process_failed";
    case MeasureErrorKind::StatsKeyMissing:
      return "stats_key_missing";
    case MeasureErrorKind::UnparsableStats:
      return "unparsable_stats";
    case MeasureErrorKind::MissingEntry:
      return "missing_entry";
  }
  throw std::logic_error("unreachable MeasureErrorKind");
}

// ---------------------------------------------------------------------------
// ManifestBackend

ManifestBackend::ManifestBackend(
    std::map<std::string, std::map<int, double>> entries)
    : entries_(std::move(entries)) {}

ManifestBackend ManifestBackend::from_file(const fs::path& path) {
  return from_json(Json::parse(read_file(path)));
}

ManifestBackend ManifestBackend::from_json(const Json& j) {
  std::map<std::string, std::map<int, double>> entries;
  for (const auto& [program_id, tests] : j.items()) {
    auto& per_test = entries[program_id];
    for (const auto& [index_str, value] : tests.items()) {
      const int index = std::stoi(index_str);
      const double v = value.get<double>();
      if (v <= 0.0) {
        throw std::invalid_argument("manifest cost must be positive for " +
                                    program_id + " test " + index_str);
      }
      per_test[index] = v;
    }
  }
  return ManifestBackend(std::move(entries));
}

MeasureResult ManifestBackend::measure(const MeasureRequest& req) {
  const auto program_it = entries_.find(req.program_id);
  if (program_it == entries_.end()) {
    return MeasureError{MeasureErrorKind::MissingEntry,
                        "no manifest entry for program " + req.program_id};
  }
  const auto test_it = program_it->second.find(req.test_index);
  if (test_it == program_it->second.end()) {
    return MeasureError{MeasureErrorKind::MissingEntry,
                        "no manifest entry for program " + req.program_id +
                            " test " + std::to_string(req.test_index)};
  }
  return PerfMeasurement{test_it->second, descriptor_.unit};
}

std::optional<std::map<int, double>> ManifestBackend::entries_for(
    const std::string& program_id) const {
  const auto it = entries_.find(program_id);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// Stats parsing

Result<double, MeasureError> parse_stats_value(std::string_view stats_text,
                                               std::string_view key) {
  std::size_t pos = 0;
  bool saw_line = false;
  while (pos <= stats_text.size()) {
    const std::size_t eol = stats_text.find('\n', pos);
    std::string_view line = stats_text.substr(
        pos, eol == std::string_view::npos ? std::string_view::npos
                                           : eol - pos);
    pos = (eol == std::string_view::npos) ? stats_text.size() + 1 : eol + 1;

    const std::size_t key_begin = line.find_first_not_of(" \t\r");
    if (key_begin == std::string_view::npos) continue;
    saw_line = true;
    const std::size_t key_end = line.find_first_of(" \t", key_begin);
    if (key_end == std::string_view::npos) continue;
    if (line.substr(key_begin, key_end - key_begin) != key) continue;

    const std::size_t val_begin = line.find_first_not_of(" \t", key_end);
    if (val_begin == std::string_view::npos) {
      return MeasureError{MeasureErrorKind::UnparsableStats,
                          "stats key has no value: " + std::string(key)};
    }
    std::size_t val_end = line.find_first_of(" \t\r", val_begin);
    if (val_end == std::string_view::npos) val_end = line.size();
    const std::string token(line.substr(val_begin, val_end - val_begin));
    try {
      std::size_t consumed = 0;
      const double value = std::stod(token, &consumed);
      if (consumed != token.size()) throw std::invalid_argument(token);
      return value;
    } catch (const std::exception&) {
      return MeasureError{MeasureErrorKind::UnparsableStats,
                          "non-numeric stats value '" + token + "' for key " +
                              std::string(key)};
    }
  }
  (void)saw_line;
  return MeasureError{MeasureErrorKind::StatsKeyMissing,
                      "stats key not found: " + std::string(key)};
}

// ---------------------------------------------------------------------------
// SimulatorDriver

SimulatorDriver::SimulatorDriver(SimulatorConfig config)
    : config_(std::move(config)) {
  if (config_.command.empty()) {
    throw std::invalid_argument("simulator command template is empty");
  }
  if (config_.max_parallel < 1) {
    throw std::invalid_argument("simulator max_parallel must be >= 1");
  }
  if (config_.workdir.empty()) {
    config_.workdir = fs::temp_directory_path() / "perfedit-sim";
  }
  fs::create_directories(config_.workdir);
}

MeasureResult SimulatorDriver::measure(const MeasureRequest& req) {
  {
    std::unique_lock lock(slots_mutex_);
    slots_cv_.wait(lock,
                   [&] { return slots_in_use_ < config_.max_parallel; });
    ++slots_in_use_;
  }
  struct SlotRelease {
    SimulatorDriver* self;
    ~SlotRelease() {
      std::lock_guard lock(self->slots_mutex_);
      --self->slots_in_use_;
      self->slots_cv_.notify_one();
    }
  } release{this};

  const std::uint64_t ticket =
      scratch_counter_.fetch_add(1, std::memory_order_relaxed);
  const fs::path scratch =
      config_.workdir / ("m" + std::to_string(::getpid()) + "-" +
                         std::to_string(ticket));
  fs::create_directories(scratch);
  const fs::path input_path = scratch / "input.txt";
  const fs::path stats_path = scratch / "stats.txt";
  write_file_atomic(input_path, req.input);

  auto argv = substitute_placeholders(
      split_command(config_.command),
      {{"binary", req.artifact.string()},
       {"input", input_path.string()},
       {"stats_out", stats_path.string()}});

  RunLimits limits;
  limits.wall_timeout_s = config_.timeout_s;
  const RunResult run = run_process(argv, "", limits);

  MeasureResult result = [&]() -> MeasureResult {
    if (run.timed_out) {
      return MeasureError{MeasureErrorKind::Timeout,
                          "simulator exceeded " +
                              std::to_string(config_.timeout_s) + "s"};
    }
    if (!run.exited || run.exit_code != 0) {
      std::string detail = run.exited
                               ? "simulator exit code " +
                                     std::to_string(run.exit_code)
                               : "simulator killed by signal " +
                                     std::to_string(run.term_signal);
      if (!run.err.empty()) {
        detail += ": " + run.err.substr(0, 512);
      }
      return MeasureError{MeasureErrorKind::ProcessFailed, detail};
    }
    std::string stats_text;
    try {
      stats_text = read_file(stats_path);
    } catch (const std::exception&) {
      return MeasureError{MeasureErrorKind::UnparsableStats,
                          "simulator produced no stats file"};
    }
    auto parsed = parse_stats_value(stats_text, config_.stats_key);
    if (!parsed.ok()) return parsed.error();
    return PerfMeasurement{parsed.value(), descriptor_.unit};
  }();

  std::error_code ec;
  fs::remove_all(scratch, ec);
  return result;
}

// ---------------------------------------------------------------------------
// NoiseModel

NoiseModel::NoiseModel(double sigma, std::uint64_t seed, double base_cost)
    : sigma_(sigma), base_cost_(base_cost), rng_(seed) {
  if (sigma < 0.0) throw std::invalid_argument("sigma must be >= 0");
  if (base_cost <= 0.0) throw std::invalid_argument("base_cost must be > 0");
}

double NoiseModel::sample() {
  // Box-Muller on two uniforms in (0,1]; consumes exactly two draws per
  // sample so streams line up across platforms.
  const auto uniform = [&] {
    return (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;
  };
  const double u1 = uniform();
  const double u2 = uniform();
  const double z = std::sqrt(-2.0 * std::log(u1)) *
                   std::cos(2.0 * std::numbers::pi * u2);
  return base_cost_ * std::exp(sigma_ * z);
}

// ---------------------------------------------------------------------------
// WallClockBackend

WallClockBackend::WallClockBackend() = default;

WallClockBackend::WallClockBackend(NoiseModel noise)
    : simulated_(true), noise_(std::move(noise)) {
  descriptor_.name = "wallclock_simulated";
}

MeasureResult WallClockBackend::measure(const MeasureRequest& req) {
  if (simulated_) {
    std::lock_guard lock(noise_mutex_);
    return PerfMeasurement{noise_->sample(), descriptor_.unit};
  }
  const RunResult run =
      run_process({req.artifact.string()}, req.input, req.limits);
  if (run.timed_out) {
    return MeasureError{MeasureErrorKind::Timeout,
                        "process exceeded " +
                            std::to_string(req.limits.wall_timeout_s) + "s"};
  }
  if (!run.exited || run.exit_code != 0) {
    return MeasureError{MeasureErrorKind::ProcessFailed,
                        run.exited ? "exit code " +
                                         std::to_string(run.exit_code)
                                   : "killed by signal " +
                                         std::to_string(run.term_signal)};
  }
  return PerfMeasurement{run.wall_seconds, descriptor_.unit};
}

}  // namespace perfedit
