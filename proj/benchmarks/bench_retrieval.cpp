#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "perfedit/retrieval.hpp"

namespace {

std::vector<std::pair<std::string, std::string>> synthetic_corpus(int n) {
  const std::vector<std::string> words = {
      "for",  "while", "int",    "long", "vector", "sum",  "cin",
      "cout", "sort",  "string", "map",  "size",   "push", "return"};
  std::mt19937_64 rng(12345);
  std::vector<std::pair<std::string, std::string>> docs;
  docs.reserve(n);
  for (int d = 0; d < n; ++d) {
    std::string text;
    const int len = 40 + static_cast<int>(rng() % 200);
    for (int w = 0; w < len; ++w) {
      text += words[rng() % words.size()];
      text += ' ';
    }
    docs.emplace_back("pair" + std::to_string(d), text);
  }
  return docs;
}

void BM_IndexBuild(benchmark::State& state) {
  const auto docs = synthetic_corpus(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto index = perfedit::EmbeddingIndex::build(docs);
    benchmark::DoNotOptimize(index);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_IndexBuild)->Range(64, 4096)->Complexity();

void BM_IndexQuery(benchmark::State& state) {
  const auto docs = synthetic_corpus(static_cast<int>(state.range(0)));
  const auto index = perfedit::EmbeddingIndex::build(docs);
  const std::string query = docs[docs.size() / 2].second;
  for (auto _ : state) {
    auto hits = index.query(query, 4);
    benchmark::DoNotOptimize(hits);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_IndexQuery)->Range(64, 4096)->Complexity();

void BM_Tokenize(benchmark::State& state) {
  const auto docs = synthetic_corpus(1);
  for (auto _ : state) {
    auto tokens = perfedit::tokenize(docs[0].second);
    benchmark::DoNotOptimize(tokens);
  }
}
BENCHMARK(BM_Tokenize);

}  // namespace

BENCHMARK_MAIN();
