#include "perfedit/jsonl.hpp"

#include <gtest/gtest.h>
#include <unistd.h>

namespace perfedit {
namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& tag) {
  const auto dir = fs::temp_directory_path() /
                   ("perfedit-jsonl-" + tag + "-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

TEST(Jsonl, RoundTrip) {
  const auto dir = temp_dir("roundtrip");
  const std::vector<Json> rows = {Json{{"a", 1}}, Json{{"b", "two"}}};
  write_jsonl(dir / "x.jsonl", rows);
  const auto back = read_jsonl(dir / "x.jsonl", nullptr);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].at("a"), 1);
  EXPECT_EQ(back[1].at("b"), "two");
  fs::remove_all(dir);
}

TEST(Jsonl, MalformedLineBecomesRejectAndParsingContinues) {
  const auto dir = temp_dir("malformed");
  write_file_atomic(dir / "x.jsonl",
                    "{\"ok\": 1}\nTHIS IS NOT JSON\n{\"ok\": 2}\n");
  std::vector<Reject> rejects;
  const auto rows = read_jsonl(dir / "x.jsonl",
                               [&](Reject r) { rejects.push_back(r); });
  EXPECT_EQ(rows.size(), 2u);
  ASSERT_EQ(rejects.size(), 1u);
  EXPECT_EQ(rejects[0].id, "line 2");
  fs::remove_all(dir);
}

TEST(LoadSubmissions, MissingFieldIsRecordLevelReject) {
  const auto dir = temp_dir("missing-field");
  write_file_atomic(
      dir / "subs.jsonl",
      R"({"submission_id": "good", "user_id": "u", "problem_id": "p", "timestamp": 1, "language": "cpp", "status": "accepted", "code": "x"})"
      "\n"
      R"({"submission_id": "bad", "user_id": "u", "problem_id": "p"})"
      "\n");
  const auto corpus = load_submissions(dir / "subs.jsonl");
  EXPECT_EQ(corpus.submissions.size(), 1u);
  ASSERT_EQ(corpus.rejects.size(), 1u);
  EXPECT_EQ(corpus.rejects[0].id, "bad");
  fs::remove_all(dir);
}

TEST(LoadSubmissions, DuplicateIdsRejected) {
  const auto dir = temp_dir("dup-id");
  const std::string record =
      R"({"submission_id": "s", "user_id": "u", "problem_id": "p", "timestamp": 1, "language": "cpp", "status": "accepted", "code": "x"})";
  write_file_atomic(dir / "subs.jsonl", record + "\n" + record + "\n");
  const auto corpus = load_submissions(dir / "subs.jsonl");
  EXPECT_EQ(corpus.submissions.size(), 1u);
  EXPECT_EQ(corpus.rejects.size(), 1u);
  fs::remove_all(dir);
}

TEST(LoadSubmissions, NegativeTimestampRejected) {
  const auto dir = temp_dir("neg-ts");
  write_file_atomic(
      dir / "subs.jsonl",
      R"({"submission_id": "s", "user_id": "u", "problem_id": "p", "timestamp": -5, "language": "cpp", "status": "accepted", "code": "x"})"
      "\n");
  const auto corpus = load_submissions(dir / "subs.jsonl");
  EXPECT_TRUE(corpus.submissions.empty());
  EXPECT_EQ(corpus.rejects.size(), 1u);
  fs::remove_all(dir);
}

TEST(LoadSubmissions, ResolvesCodePath) {
  const auto dir = temp_dir("code-path");
  write_file_atomic(dir / "prog.cpp", "int main() { return 7; }\n");
  write_file_atomic(
      dir / "subs.jsonl",
      R"({"submission_id": "s", "user_id": "u", "problem_id": "p", "timestamp": 1, "language": "cpp", "status": "accepted", "code_path": "prog.cpp"})"
      "\n");
  const auto corpus = load_submissions(dir / "subs.jsonl", dir);
  ASSERT_EQ(corpus.submissions.size(), 1u);
  EXPECT_EQ(corpus.submissions[0].code, "int main() { return 7; }\n");
  fs::remove_all(dir);
}

TEST(WriteFileAtomic, LeavesNoTempOnSuccess) {
  const auto dir = temp_dir("atomic");
  write_file_atomic(dir / "out.txt", "payload");
  EXPECT_EQ(read_file(dir / "out.txt"), "payload");
  std::size_t entries = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    (void)entry;
    ++entries;
  }
  EXPECT_EQ(entries, 1u);
  fs::remove_all(dir);
}

TEST(ProgramPair, JsonRoundTripIncludingClassId) {
  ProgramPair pair;
  pair.pair_id = "p:a:b";
  pair.problem_id = "p";
  pair.src_id = "a";
  pair.tgt_id = "b";
  pair.src = "slow";
  pair.tgt = "fast";
  pair.src_runtime = {10, PerfUnit::CostUnits};
  pair.tgt_runtime = {2, PerfUnit::CostUnits};
  pair.relative_improvement = 0.8;
  pair.split = Split::Test;
  pair.provenance = Provenance::SelfPlay;
  pair.class_id = "C0003";

  const auto back = Json(pair).get<ProgramPair>();
  EXPECT_EQ(back.pair_id, pair.pair_id);
  EXPECT_EQ(back.split, Split::Test);
  EXPECT_EQ(back.provenance, Provenance::SelfPlay);
  ASSERT_TRUE(back.class_id.has_value());
  EXPECT_EQ(*back.class_id, "C0003");
  EXPECT_DOUBLE_EQ(back.speedup(), 5.0);
}

}  // namespace
}  // namespace perfedit
