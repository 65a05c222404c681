#include "perfedit/jsonl.hpp"

#include <unistd.h>

#include <fstream>
#include <sstream>
#include <unordered_set>

namespace perfedit {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open file: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  fs::path dir = path.parent_path();
  if (dir.empty()) dir = ".";
  fs::create_directories(dir);
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot open file for write: " + tmp.string());
    }
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      throw std::runtime_error("short write to " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

std::vector<Json> read_jsonl(const fs::path& path,
                             const std::function<void(Reject)>& on_reject) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open file: " + path.string());
  }
  std::vector<Json> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Json parsed = Json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded()) {
      if (on_reject) {
        on_reject({"parse", "line " + std::to_string(lineno),
                   "invalid JSON"});
      }
      continue;
    }
    rows.push_back(std::move(parsed));
  }
  return rows;
}

void write_jsonl(const fs::path& path, const std::vector<Json>& rows) {
  std::string out;
  for (const auto& row : rows) {
    out += row.dump();
    out += '\n';
  }
  write_file_atomic(path, out);
}

SubmissionCorpus load_submissions(const fs::path& path,
                                  const fs::path& code_root) {
  SubmissionCorpus corpus;
  auto rows = read_jsonl(
      path, [&](Reject r) { corpus.rejects.push_back(std::move(r)); });

  std::unordered_set<std::string> seen_ids;
  int rowno = 0;
  for (auto& row : rows) {
    ++rowno;
    const std::string locator =
        row.contains("submission_id") && row["submission_id"].is_string()
            ? row["submission_id"].get<std::string>()
            : "record " + std::to_string(rowno);
    try {
      if (!row.contains("code") && row.contains("code_path")) {
        const fs::path rel = row.at("code_path").get<std::string>();
        row["code"] = read_file(code_root / rel);
      }
      Submission s = row.get<Submission>();
      if (!seen_ids.insert(s.submission_id).second) {
        corpus.rejects.push_back(
            {"parse", locator, "duplicate submission_id"});
        continue;
      }
      corpus.submissions.push_back(std::move(s));
    } catch (const std::exception& e) {
      corpus.rejects.push_back({"parse", locator, e.what()});
    }
  }
  return corpus;
}

}  // namespace perfedit
