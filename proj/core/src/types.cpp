#include "perfedit/types.hpp"

namespace perfedit {

std::string to_string(PerfUnit unit) {
  switch (unit) {
    case PerfUnit::SimSeconds:
      return "sim_seconds";
    case PerfUnit::CostUnits:
      return "cost_units";
    case PerfUnit::WallSeconds:
      return "wall_seconds";
  }
  throw std::logic_error("unreachable PerfUnit");
}

PerfUnit perf_unit_from_string(const std::string& s) {
  if (s == "sim_seconds") return PerfUnit::SimSeconds;
  if (s == "cost_units") return PerfUnit::CostUnits;
  if (s == "wall_seconds") return PerfUnit::WallSeconds;
  throw std::invalid_argument("unknown perf unit: " + s);
}

PerfMeasurement sum_measurements(const std::vector<PerfMeasurement>& parts) {
  if (parts.empty()) {
    throw std::invalid_argument("cannot aggregate zero measurements");
  }
  PerfMeasurement total{0.0, parts.front().unit};
  for (const auto& m : parts) {
    if (m.unit != total.unit) {
      throw std::invalid_argument(
          "unit mismatch in aggregation: " + to_string(total.unit) + " vs " +
          to_string(m.unit));
    }
    total.value += m.value;
  }
  return total;
}

std::string to_string(Split split) {
  switch (split) {
    case Split::Train:
      return "train";
    case Split::Val:
      return "val";
    case Split::Test:
      return "test";
    case Split::Unassigned:
      return "unassigned";
  }
  throw std::logic_error("unreachable Split");
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  if (s == "unassigned") return Split::Unassigned;
  throw std::invalid_argument("unknown split: " + s);
}

std::string to_string(Provenance p) {
  return p == Provenance::Human ? "human" : "self_play";
}

Provenance provenance_from_string(const std::string& s) {
  if (s == "human") return Provenance::Human;
  if (s == "self_play") return Provenance::SelfPlay;
  throw std::invalid_argument("unknown provenance: " + s);
}

void to_json(Json& j, const PerfMeasurement& m) {
  j = Json{{"value", m.value}, {"unit", to_string(m.unit)}};
}

void from_json(const Json& j, PerfMeasurement& m) {
  m.value = j.at("value").get<double>();
  m.unit = perf_unit_from_string(j.at("unit").get<std::string>());
}

void to_json(Json& j, const BackendDescriptor& d) {
  j = Json{{"name", d.name},
           {"deterministic", d.deterministic},
           {"unit", to_string(d.unit)}};
}

void from_json(const Json& j, BackendDescriptor& d) {
  d.name = j.at("name").get<std::string>();
  d.deterministic = j.at("deterministic").get<bool>();
  d.unit = perf_unit_from_string(j.at("unit").get<std::string>());
}

void to_json(Json& j, const Submission& s) {
  j = Json{{"submission_id", s.submission_id},
           {"user_id", s.user_id},
           {"problem_id", s.problem_id},
           {"timestamp", s.timestamp},
           {"language", s.language},
           {"status",
            s.status == SubmissionStatus::Accepted ? "accepted" : "rejected"},
           {"code", s.code}};
}

void from_json(const Json& j, Submission& s) {
  s.submission_id = j.at("submission_id").get<std::string>();
  s.user_id = j.at("user_id").get<std::string>();
  s.problem_id = j.at("problem_id").get<std::string>();
  s.timestamp = j.at("timestamp").get<std::int64_t>();
  if (s.timestamp < 0) {
    throw std::invalid_argument("negative timestamp for submission " +
                                s.submission_id);
  }
  s.language = j.value("language", std::string{});
  const auto status = j.at("status").get<std::string>();
  if (status == "accepted") {
    s.status = SubmissionStatus::Accepted;
  } else if (status == "rejected") {
    s.status = SubmissionStatus::Rejected;
  } else {
    throw std::invalid_argument("unknown status: " + status);
  }
  // Code may be inline or referenced by path; path resolution happens at
  // load time (jsonl.cpp) so the in-memory record always carries the text.
  s.code = j.at("code").get<std::string>();
}

void to_json(Json& j, const ProgramPair& p) {
  j = Json{{"pair_id", p.pair_id},
           {"problem_id", p.problem_id},
           {"src_id", p.src_id},
           {"tgt_id", p.tgt_id},
           {"src", p.src},
           {"tgt", p.tgt},
           {"src_runtime", p.src_runtime},
           {"tgt_runtime", p.tgt_runtime},
           {"relative_improvement", p.relative_improvement},
           {"split", to_string(p.split)},
           {"provenance", to_string(p.provenance)}};
  if (p.class_id) {
    j["class_id"] = *p.class_id;
  }
}

void from_json(const Json& j, ProgramPair& p) {
  p.pair_id = j.at("pair_id").get<std::string>();
  p.problem_id = j.at("problem_id").get<std::string>();
  p.src_id = j.at("src_id").get<std::string>();
  p.tgt_id = j.at("tgt_id").get<std::string>();
  p.src = j.at("src").get<std::string>();
  p.tgt = j.at("tgt").get<std::string>();
  p.src_runtime = j.at("src_runtime").get<PerfMeasurement>();
  p.tgt_runtime = j.at("tgt_runtime").get<PerfMeasurement>();
  p.relative_improvement = j.at("relative_improvement").get<double>();
  p.split = split_from_string(j.at("split").get<std::string>());
  p.provenance = provenance_from_string(j.at("provenance").get<std::string>());
  if (j.contains("class_id")) {
    p.class_id = j.at("class_id").get<std::string>();
  }
}

void to_json(Json& j, const Reject& r) {
  j = Json{{"stage", r.stage}, {"id", r.id}, {"reason", r.reason}};
}

void from_json(const Json& j, Reject& r) {
  r.stage = j.at("stage").get<std::string>();
  r.id = j.at("id").get<std::string>();
  r.reason = j.at("reason").get<std::string>();
}

}  // namespace perfedit
