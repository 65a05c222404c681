#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "perfedit/dataset.hpp"
#include "perfedit/harness.hpp"
#include "perfedit/hash.hpp"
#include "perfedit/selfplay.hpp"

namespace {

using perfedit::PerfMeasurement;
using perfedit::PerfUnit;
using perfedit::Submission;
using perfedit::SubmissionStatus;

std::vector<Submission> synthetic_log(int n_users, int n_problems,
                                      int per_trajectory) {
  std::vector<Submission> submissions;
  std::mt19937_64 rng(99);
  for (int u = 0; u < n_users; ++u) {
    for (int p = 0; p < n_problems; ++p) {
      for (int i = 0; i < per_trajectory; ++i) {
        Submission s;
        s.submission_id = "s" + std::to_string(u) + "-" + std::to_string(p) +
                          "-" + std::to_string(i);
        s.user_id = "u" + std::to_string(u);
        s.problem_id = "p" + std::to_string(p);
        s.timestamp = static_cast<std::int64_t>(rng() % 100000);
        s.status = (rng() % 5 == 0) ? SubmissionStatus::Rejected
                                    : SubmissionStatus::Accepted;
        s.code = "int main() { return " + std::to_string(rng() % 100) + "; }";
        submissions.push_back(std::move(s));
      }
    }
  }
  return submissions;
}

void BM_BuildTrajectories(benchmark::State& state) {
  const auto log = synthetic_log(static_cast<int>(state.range(0)), 20, 6);
  for (auto _ : state) {
    auto submissions = log;
    auto build = perfedit::build_trajectories(std::move(submissions));
    benchmark::DoNotOptimize(build);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BuildTrajectories)->Range(4, 64)->Complexity();

void BM_MakePairs(benchmark::State& state) {
  perfedit::Trajectory traj;
  traj.problem_id = "p";
  std::map<std::string, PerfMeasurement> runtimes;
  std::mt19937_64 rng(7);
  const int n = static_cast<int>(state.range(0));
  for (int i = 0; i < n; ++i) {
    Submission s;
    s.submission_id = "s" + std::to_string(i);
    s.problem_id = "p";
    s.timestamp = i;
    s.status = SubmissionStatus::Accepted;
    traj.programs.push_back(s);
    runtimes[s.submission_id] =
        PerfMeasurement{1.0 + static_cast<double>(rng() % 1000),
                        PerfUnit::CostUnits};
  }
  for (auto _ : state) {
    auto pairs = perfedit::make_pairs(traj, runtimes);
    benchmark::DoNotOptimize(pairs);
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_MakePairs)->Range(8, 512)->Complexity();

void BM_NormalizeOutput(benchmark::State& state) {
  std::string text;
  std::mt19937_64 rng(3);
  for (int line = 0; line < state.range(0); ++line) {
    text += std::string(1 + rng() % 60, 'x');
    text += "   \t\n";
  }
  for (auto _ : state) {
    auto normalized = perfedit::normalize_output(text);
    benchmark::DoNotOptimize(normalized);
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_NormalizeOutput)->Range(64, 8192);

void BM_Sha256(benchmark::State& state) {
  const std::string payload(static_cast<std::size_t>(state.range(0)), 'q');
  for (auto _ : state) {
    auto digest = perfedit::sha256_hex(payload);
    benchmark::DoNotOptimize(digest);
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) *
                          state.range(0));
}
BENCHMARK(BM_Sha256)->Range(1 << 10, 1 << 20);

void BM_GroupEquivalence(benchmark::State& state) {
  std::mt19937_64 rng(31);
  std::vector<perfedit::OutputSignature> sigs;
  const int n = static_cast<int>(state.range(0));
  for (int p = 0; p < n; ++p) {
    perfedit::OutputSignature sig;
    sig.program_id = "P" + std::to_string(p);
    sig.inputs_digest = "shared";
    std::string blob;
    for (int i = 0; i < 8; ++i) {
      const std::string out = std::to_string(rng() % 4);
      sig.outputs.push_back(out);
      blob += out + ";";
    }
    sig.hash = perfedit::sha256_hex(blob);
    sigs.push_back(std::move(sig));
  }
  for (auto _ : state) {
    auto classes = perfedit::group_equivalence(sigs);
    benchmark::DoNotOptimize(classes);
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_GroupEquivalence)->Range(64, 4096)->Complexity();

}  // namespace

BENCHMARK_MAIN();
