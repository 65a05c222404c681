#include "perfedit/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>

#include "perfedit/hash.hpp"

namespace perfedit {

TrajectoryBuild build_trajectories(std::vector<Submission> submissions) {
  TrajectoryBuild build;
  std::map<std::pair<std::string, std::string>, Trajectory> grouped;
  for (auto& s : submissions) {
    if (s.status != SubmissionStatus::Accepted) continue;
    auto& traj = grouped[{s.user_id, s.problem_id}];
    traj.user_id = s.user_id;
    traj.problem_id = s.problem_id;
    traj.programs.push_back(std::move(s));
  }
  for (auto& [key, traj] : grouped) {
    std::sort(traj.programs.begin(), traj.programs.end(),
              [](const Submission& a, const Submission& b) {
                return std::tie(a.timestamp, a.submission_id) <
                       std::tie(b.timestamp, b.submission_id);
              });
    build.trajectories.push_back(std::move(traj));
  }
  return build;
}

std::vector<ProgramPair> make_pairs(
    const Trajectory& traj,
    const std::map<std::string, PerfMeasurement>& runtimes,
    double min_improvement) {
  std::vector<PerfMeasurement> r(traj.programs.size());
  for (std::size_t i = 0; i < traj.programs.size(); ++i) {
    const auto it = runtimes.find(traj.programs[i].submission_id);
    if (it == runtimes.end()) {
      throw std::invalid_argument("no runtime for program " +
                                  traj.programs[i].submission_id);
    }
    if (it->second.value <= 0.0) {
      throw std::invalid_argument("non-positive runtime for program " +
                                  traj.programs[i].submission_id);
    }
    r[i] = it->second;
  }

  std::vector<ProgramPair> pairs;
  for (std::size_t i = 0; i < traj.programs.size(); ++i) {
    for (std::size_t j = i + 1; j < traj.programs.size(); ++j) {
      if (r[i].unit != r[j].unit) {
        throw std::invalid_argument("mixed measurement units in trajectory");
      }
      const double improvement = (r[i].value - r[j].value) / r[i].value;
      if (!(improvement > min_improvement)) continue;

      ProgramPair pair;
      pair.problem_id = traj.problem_id;
      pair.src_id = traj.programs[i].submission_id;
      pair.tgt_id = traj.programs[j].submission_id;
      pair.pair_id = traj.problem_id + ":" + pair.src_id + ":" + pair.tgt_id;
      pair.src = traj.programs[i].code;
      pair.tgt = traj.programs[j].code;
      pair.src_runtime = r[i];
      pair.tgt_runtime = r[j];
      pair.relative_improvement = improvement;
      pair.provenance = Provenance::Human;
      pairs.push_back(std::move(pair));
    }
  }
  return pairs;
}

RelabelResult relabel_runtimes(const std::vector<Submission>& programs,
                               const std::vector<TestCase>& tests,
                               PerfBackend& backend,
                               const RelabelOptions& options) {
  RelabelResult result;
  if (tests.empty()) {
    for (const auto& p : programs) {
      result.unmeasurable.push_back(
          {"relabel", p.submission_id, "no test suite for problem"});
    }
    return result;
  }

  if (!backend.requires_artifact()) {
    for (const auto& p : programs) {
      std::vector<PerfMeasurement> parts;
      std::string failure;
      for (const auto& test : tests) {
        MeasureRequest req;
        req.program_id = p.submission_id;
        req.test_index = test.index;
        req.input = test.input;
        req.limits = options.limits;
        auto measured = backend.measure(req);
        if (!measured.ok()) {
          failure = "test " + std::to_string(test.index) + ": " +
                    to_string(measured.error().kind) + " (" +
                    measured.error().detail + ")";
          break;
        }
        parts.push_back(measured.value());
      }
      if (!failure.empty()) {
        result.unmeasurable.push_back({"relabel", p.submission_id, failure});
      } else {
        result.runtimes[p.submission_id] = sum_measurements(parts);
      }
    }
    return result;
  }

  // Executing backend: compile, gate on the full suite, sum measurements.
  struct Outcome {
    bool measured = false;
    PerfMeasurement runtime;
    std::string failure;
  };
  std::vector<Outcome> outcomes(programs.size());
  const auto measure_one = [&](std::size_t idx) {
    const Submission& p = programs[idx];
    const auto workdir =
        std::filesystem::temp_directory_path() /
        ("perfedit-relabel-" + sha256_hex(p.submission_id).substr(0, 12));
    auto compiled = compile(p.code, options.compile, workdir);
    if (!compiled.ok()) {
      outcomes[idx].failure =
          compiled.error().kind == CompileErrorKind::Timeout
              ? "compile timeout"
              : "compile failed";
      return;
    }
    RunOptions run_options;
    run_options.program_id = p.submission_id;
    const RunReport report = run_tests(compiled.value().path, tests,
                                       options.limits, backend, run_options);
    if (judge(report) != Judgement::Correct || !report.total_runtime) {
      for (std::size_t t = 0; t < report.verdicts.size(); ++t) {
        if (report.verdicts[t] != Verdict::Pass) {
          outcomes[idx].failure = "test " + std::to_string(tests[t].index) +
                                  ": " + to_string(report.verdicts[t]);
          break;
        }
      }
      if (outcomes[idx].failure.empty()) {
        outcomes[idx].failure = "not measurable";
      }
      return;
    }
    outcomes[idx].measured = true;
    outcomes[idx].runtime = *report.total_runtime;
  };

  if (options.jobs <= 1 || programs.size() <= 1) {
    for (std::size_t i = 0; i < programs.size(); ++i) measure_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    const int jobs =
        std::min<int>(options.jobs, static_cast<int>(programs.size()));
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= programs.size()) return;
          measure_one(i);
        }
      });
    }
    for (auto& t : workers) t.join();
  }

  // Merged in input order: results do not depend on completion order.
  for (std::size_t i = 0; i < programs.size(); ++i) {
    if (outcomes[i].measured) {
      result.runtimes[programs[i].submission_id] = outcomes[i].runtime;
    } else {
      result.unmeasurable.push_back(
          {"relabel", programs[i].submission_id, outcomes[i].failure});
    }
  }
  return result;
}

SplitAssignment split_by_problem(const std::vector<ProgramPair>& pairs,
                                 const std::array<double, 3>& ratios,
                                 std::uint64_t seed) {
  double ratio_sum = 0.0;
  for (double r : ratios) {
    if (r < 0.0) throw std::invalid_argument("split ratio must be >= 0");
    ratio_sum += r;
  }
  if (std::abs(ratio_sum - 1.0) > 1e-9) {
    throw std::invalid_argument("split ratios must sum to 1");
  }

  std::vector<std::string> problems;
  for (const auto& pair : pairs) problems.push_back(pair.problem_id);
  std::sort(problems.begin(), problems.end());
  problems.erase(std::unique(problems.begin(), problems.end()),
                 problems.end());

  // An empty corpus partitions trivially; the too-few-problems check is
  // about corpora that cannot give every nonzero split a problem.
  if (problems.empty()) {
    SplitAssignment empty;
    empty.seed = seed;
    empty.ratios = ratios;
    return empty;
  }

  int nonzero = 0;
  for (double r : ratios) nonzero += (r > 0.0) ? 1 : 0;
  if (problems.size() < static_cast<std::size_t>(nonzero)) {
    throw std::invalid_argument(
        "fewer problems than nonzero-ratio splits: " +
        std::to_string(problems.size()) + " < " + std::to_string(nonzero));
  }

  // Hand-rolled Fisher-Yates: std::shuffle's draw sequence is unspecified,
  // this one is pinned.
  std::mt19937_64 rng(seed);
  for (std::size_t i = problems.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(problems[i - 1], problems[j]);
  }

  // Largest-remainder apportionment over problem counts.
  const std::size_t n = problems.size();
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainders{};
  std::size_t assigned = 0;
  for (int s = 0; s < 3; ++s) {
    const double exact = ratios[s] * static_cast<double>(n);
    counts[s] = static_cast<std::size_t>(std::floor(exact));
    remainders[s] = exact - std::floor(exact);
    assigned += counts[s];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return remainders[a] > remainders[b]; });
  for (std::size_t leftover = n - assigned, i = 0; leftover > 0;
       --leftover, ++i) {
    ++counts[order[i % 3]];
  }

  SplitAssignment assignment;
  assignment.seed = seed;
  assignment.ratios = ratios;
  std::size_t cursor = 0;
  static constexpr std::array<Split, 3> kSplits{Split::Train, Split::Val,
                                                Split::Test};
  for (int s = 0; s < 3; ++s) {
    for (std::size_t i = 0; i < counts[s]; ++i, ++cursor) {
      assignment.by_problem[problems[cursor]] = kSplits[s];
    }
  }
  return assignment;
}

void apply_split(std::vector<ProgramPair>& pairs,
                 const SplitAssignment& assignment) {
  for (auto& pair : pairs) {
    const auto it = assignment.by_problem.find(pair.problem_id);
    pair.split = (it != assignment.by_problem.end()) ? it->second
                                                     : Split::Unassigned;
  }
}

Json split_assignment_to_json(const SplitAssignment& assignment) {
  Json problems = Json::object();
  for (const auto& [problem, split] : assignment.by_problem) {
    problems[problem] = to_string(split);
  }
  return Json{{"seed", assignment.seed},
              {"ratios", assignment.ratios},
              {"assignment", problems}};
}

std::vector<ProgramPair> build_hq_subset(std::vector<ProgramPair> pairs,
                                         int max_per_problem) {
  if (max_per_problem < 0) {
    throw std::invalid_argument("max_per_problem must be >= 0");
  }
  std::map<std::string, std::vector<ProgramPair>> by_problem;
  for (auto& pair : pairs) {
    by_problem[pair.problem_id].push_back(std::move(pair));
  }
  std::vector<ProgramPair> kept;
  for (auto& [problem, group] : by_problem) {
    std::sort(group.begin(), group.end(),
              [](const ProgramPair& a, const ProgramPair& b) {
                const double sa = a.speedup();
                const double sb = b.speedup();
                if (sa != sb) return sa > sb;
                const auto ha = sha256_hex(a.src);
                const auto hb = sha256_hex(b.src);
                if (ha != hb) return ha < hb;
                return sha256_hex(a.tgt) < sha256_hex(b.tgt);
              });
    const std::size_t take =
        std::min(group.size(), static_cast<std::size_t>(max_per_problem));
    for (std::size_t i = 0; i < take; ++i) {
      kept.push_back(std::move(group[i]));
    }
  }
  return kept;
}

std::string normalize_code_whitespace(std::string_view code) {
  std::string out;
  out.reserve(code.size());
  std::string line;
  const auto flush_line = [&] {
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t' ||
                             line.back() == '\r')) {
      line.pop_back();
    }
    out += line;
    line.clear();
  };
  for (char c : code) {
    if (c == '\n') {
      flush_line();
      out.push_back('\n');
    } else if (c == ' ' || c == '\t') {
      if (!line.empty() && line.back() != ' ') line.push_back(' ');
      if (line.empty()) line.push_back(' ');
    } else {
      line.push_back(c);
    }
  }
  flush_line();
  return out;
}

std::vector<DuplicateRuntimeGroup> audit_duplicate_runtime_inconsistency(
    const std::vector<Submission>& submissions,
    const std::map<std::string, double>& reported_runtimes,
    double threshold) {
  struct Group {
    std::vector<std::string> ids;
    double min_reported = 0.0;
    double max_reported = 0.0;
    bool any = false;
  };
  std::map<std::string, Group> groups;  // normalized code -> group
  for (const auto& s : submissions) {
    const auto it = reported_runtimes.find(s.submission_id);
    if (it == reported_runtimes.end()) continue;
    auto& g = groups[normalize_code_whitespace(s.code)];
    g.ids.push_back(s.submission_id);
    if (!g.any) {
      g.min_reported = g.max_reported = it->second;
      g.any = true;
    } else {
      g.min_reported = std::min(g.min_reported, it->second);
      g.max_reported = std::max(g.max_reported, it->second);
    }
  }

  std::vector<DuplicateRuntimeGroup> flagged;
  for (auto& [normalized, g] : groups) {
    if (g.ids.size() < 2 || g.min_reported <= 0.0) continue;
    const double ratio = g.max_reported / g.min_reported;
    if (ratio > threshold) {
      std::sort(g.ids.begin(), g.ids.end());
      flagged.push_back({sha256_hex(normalized), g.min_reported,
                         g.max_reported, ratio, std::move(g.ids)});
    }
  }
  std::sort(flagged.begin(), flagged.end(),
            [](const DuplicateRuntimeGroup& a, const DuplicateRuntimeGroup& b) {
              return a.code_hash < b.code_hash;
            });
  return flagged;
}

}  // namespace perfedit
