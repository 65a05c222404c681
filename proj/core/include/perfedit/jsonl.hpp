#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "perfedit/types.hpp"

namespace perfedit {

/// Reads a whole file; throws std::runtime_error when unreadable.
std::string read_file(const std::filesystem::path& path);

/// Writes via a temp file in the same directory plus rename, so readers
/// never observe a partial file.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents);

/// Parses one JSON object per line. Blank lines are skipped. Parse failures
/// are reported through on_reject with a "line N" locator and do not abort
/// the batch.
std::vector<Json> read_jsonl(const std::filesystem::path& path,
                             const std::function<void(Reject)>& on_reject);

/// Serializes one object per line (compact, '\n' terminated) and writes
/// atomically.
void write_jsonl(const std::filesystem::path& path,
                 const std::vector<Json>& rows);

template <typename T>
void write_jsonl_records(const std::filesystem::path& path,
                         const std::vector<T>& records) {
  std::vector<Json> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(Json(r));
  write_jsonl(path, rows);
}

struct SubmissionCorpus {
  std::vector<Submission> submissions;
  std::vector<Reject> rejects;
};

/// Loads submissions.jsonl. Records may inline the source under "code" or
/// reference it with "code_path" relative to code_root. Malformed records
/// become rejects.
SubmissionCorpus load_submissions(const std::filesystem::path& path,
                                  const std::filesystem::path& code_root = {});

}  // namespace perfedit
