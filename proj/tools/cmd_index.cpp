#include <iostream>

#include "commands.hpp"
#include "perfedit/jsonl.hpp"
#include "perfedit/retrieval.hpp"
#include "perfedit/types.hpp"

namespace perfedit::cli {

namespace fs = std::filesystem;

namespace {

struct IndexBuildOpts {
  std::string pairs;
  std::string out;
  std::string split = "train";
};

int run_index_build(const Context& ctx, const IndexBuildOpts& opts) {
  (void)ctx.config();
  std::vector<std::pair<std::string, std::string>> docs;
  for (const auto& row : read_jsonl(opts.pairs, nullptr)) {
    const auto pair = row.get<ProgramPair>();
    if (opts.split != "all" && to_string(pair.split) != opts.split) continue;
    docs.emplace_back(pair.pair_id, pair.src);
  }
  if (docs.empty()) {
    throw std::invalid_argument("no pairs in split '" + opts.split + "'");
  }
  const auto index = EmbeddingIndex::build(docs);
  index.save(opts.out);
  std::cerr << "indexed " << index.size() << " programs, dimension "
            << index.dimension() << "\n";
  return 0;
}

struct IndexQueryOpts {
  std::string index_path;
  std::string query_file;
  std::string query_text;
  int k = 2;
  std::string out;
};

int run_index_query(const Context& ctx, const IndexQueryOpts& opts) {
  (void)ctx.config();
  if (opts.query_file.empty() == opts.query_text.empty()) {
    throw std::invalid_argument(
        "exactly one of --query-file / --query is required");
  }
  const std::string query = opts.query_file.empty()
                                ? opts.query_text
                                : read_file(opts.query_file);
  const auto index = EmbeddingIndex::load(opts.index_path);
  const auto hits = index.query(query, opts.k);

  std::string lines;
  for (const auto& hit : hits) {
    lines += Json{{"pair_id", hit.pair_id}, {"score", hit.score}}.dump();
    lines += '\n';
  }
  if (opts.out.empty()) {
    std::cout << lines;
  } else {
    write_file_atomic(opts.out, lines);
  }
  return 0;
}

}  // namespace

void register_index(CLI::App& app, Context& ctx) {
  auto* index = app.add_subcommand("index", "Retrieval index");
  index->require_subcommand(1);

  {
    auto opts = std::make_shared<IndexBuildOpts>();
    auto* cmd = index->add_subcommand(
        "build", "Build a tf-idf nearest-neighbor index over pair sources");
    cmd->add_option("--pairs", opts->pairs, "pairs.jsonl")->required();
    cmd->add_option("--out", opts->out, "Output index.bin")->required();
    cmd->add_option("--split", opts->split,
                    "Which split to index (train | val | test | all)");
    cmd->callback(
        [&ctx, opts] { ctx.exit_code = run_index_build(ctx, *opts); });
  }

  {
    auto opts = std::make_shared<IndexQueryOpts>();
    auto* cmd = index->add_subcommand("query",
                                      "Retrieve the K closest programs");
    cmd->add_option("--index", opts->index_path, "index.bin")->required();
    cmd->add_option("--query-file", opts->query_file,
                    "File holding the query program");
    cmd->add_option("--query", opts->query_text, "Inline query text");
    cmd->add_option("--k", opts->k, "Neighbors to return");
    cmd->add_option("--out", opts->out,
                    "Write hits to this file instead of stdout");
    cmd->callback(
        [&ctx, opts] { ctx.exit_code = run_index_query(ctx, *opts); });
  }
}

}  // namespace perfedit::cli
