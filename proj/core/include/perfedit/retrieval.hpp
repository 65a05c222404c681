#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "perfedit/types.hpp"

namespace perfedit {

/// Lowercased alphanumeric runs; everything else separates tokens.
std::vector<std::string> tokenize(std::string_view text);

/// Deterministic bag-of-words embedder:
///   weight(t) = tf(t) * idf(t),   idf(t) = 1 + ln((1 + N) / (1 + df(t)))
/// with raw term counts and an L2-normalized result. Tokens unseen at fit
/// time are dropped at transform time.
class TfidfVectorizer {
 public:
  static TfidfVectorizer fit(std::span<const std::string> docs);

  std::vector<double> transform(std::string_view doc) const;

  std::size_t dimension() const { return vocab_.size(); }
  const std::vector<std::string>& vocab() const { return vocab_; }
  const std::vector<double>& idf() const { return idf_; }

  static TfidfVectorizer from_state(std::vector<std::string> vocab,
                                    std::vector<double> idf);

  TfidfVectorizer() = default;  // empty vocabulary; every transform is zero

 private:
  std::vector<std::string> vocab_;  // sorted
  std::vector<double> idf_;         // parallel to vocab_
};

double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct RetrievalHit {
  std::string pair_id;
  double score = 0.0;
};

/// Nearest-neighbor index over program texts. Build is deterministic;
/// queries are read-only and safe to issue concurrently.
class EmbeddingIndex {
 public:
  static EmbeddingIndex build(
      const std::vector<std::pair<std::string, std::string>>& id_texts);

  /// Top-k by cosine similarity, descending; ties broken by pair_id
  /// ascending. k larger than the corpus returns the whole corpus ranked.
  /// Throws on k < 1 or an empty index.
  std::vector<RetrievalHit> query(std::string_view text, int k) const;

  std::size_t size() const { return pair_ids_.size(); }
  std::size_t dimension() const { return vectorizer_.dimension(); }
  const std::string& vectorizer_id() const { return vectorizer_id_; }
  const std::vector<std::string>& pair_ids() const { return pair_ids_; }

  /// Binary layout: magic "PEIDX1\n", u32 version, u32 dim, u32 n, then
  /// n*dim little-endian float64 rows. A JSON sidecar at <path>.meta.json
  /// carries the pair ids and the vectorizer state.
  void save(const std::filesystem::path& path) const;
  static EmbeddingIndex load(const std::filesystem::path& path);

 private:
  EmbeddingIndex() = default;

  TfidfVectorizer vectorizer_;
  std::string vectorizer_id_ = "tfidf-v1";
  std::vector<std::string> pair_ids_;
  std::vector<std::vector<double>> vectors_;  // L2-normalized rows
};

}  // namespace perfedit
