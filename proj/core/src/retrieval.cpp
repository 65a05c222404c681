#include "perfedit/retrieval.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

#include "perfedit/jsonl.hpp"

static_assert(std::endian::native == std::endian::little,
              "index serialization assumes a little-endian host");

namespace perfedit {

namespace fs = std::filesystem;

namespace {
constexpr char kIndexMagic[8] = {'P', 'E', 'I', 'D', 'X', '1', '\n', '\0'};
constexpr std::uint32_t kIndexVersion = 1;
}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      current.push_back(static_cast<char>(
          std::tolower(static_cast<unsigned char>(c))));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

TfidfVectorizer TfidfVectorizer::fit(std::span<const std::string> docs) {
  std::map<std::string, std::size_t> df;
  for (const auto& doc : docs) {
    auto tokens = tokenize(doc);
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    for (auto& t : tokens) ++df[t];
  }
  TfidfVectorizer v;
  const double n = static_cast<double>(docs.size());
  for (auto& [token, count] : df) {
    v.vocab_.push_back(token);
    v.idf_.push_back(1.0 +
                     std::log((1.0 + n) / (1.0 + static_cast<double>(count))));
  }
  return v;
}

TfidfVectorizer TfidfVectorizer::from_state(std::vector<std::string> vocab,
                                            std::vector<double> idf) {
  if (vocab.size() != idf.size()) {
    throw std::invalid_argument("vocab/idf size mismatch");
  }
  TfidfVectorizer v;
  v.vocab_ = std::move(vocab);
  v.idf_ = std::move(idf);
  return v;
}

std::vector<double> TfidfVectorizer::transform(std::string_view doc) const {
  std::vector<double> vec(vocab_.size(), 0.0);
  for (const auto& token : tokenize(doc)) {
    const auto it = std::lower_bound(vocab_.begin(), vocab_.end(), token);
    if (it != vocab_.end() && *it == token) {
      const std::size_t idx =
          static_cast<std::size_t>(it - vocab_.begin());
      vec[idx] += idf_[idx];
    }
  }
  double norm_sq = 0.0;
  for (double x : vec) norm_sq += x * x;
  if (norm_sq > 0.0) {
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (double& x : vec) x *= inv;
  }
  return vec;
}

double cosine_similarity(std::span<const double> a,
                         std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("cosine of different dimensions");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

EmbeddingIndex EmbeddingIndex::build(
    const std::vector<std::pair<std::string, std::string>>& id_texts) {
  std::vector<std::string> docs;
  docs.reserve(id_texts.size());
  for (const auto& [id, text] : id_texts) docs.push_back(text);

  EmbeddingIndex index;
  index.vectorizer_ = TfidfVectorizer::fit(docs);
  for (const auto& [id, text] : id_texts) {
    index.pair_ids_.push_back(id);
    index.vectors_.push_back(index.vectorizer_.transform(text));
  }
  return index;
}

std::vector<RetrievalHit> EmbeddingIndex::query(std::string_view text,
                                                int k) const {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (pair_ids_.empty()) throw std::invalid_argument("query on empty index");

  const auto qv = vectorizer_.transform(text);
  std::vector<RetrievalHit> hits;
  hits.reserve(pair_ids_.size());
  for (std::size_t i = 0; i < pair_ids_.size(); ++i) {
    // Rows are L2-normalized at build time, so the dot product is the
    // cosine (zero vectors score 0 either way).
    double dot = 0.0;
    for (std::size_t d = 0; d < qv.size(); ++d) {
      dot += qv[d] * vectors_[i][d];
    }
    hits.push_back({pair_ids_[i], dot});
  }
  std::sort(hits.begin(), hits.end(),
            [](const RetrievalHit& a, const RetrievalHit& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.pair_id < b.pair_id;
            });
  if (hits.size() > static_cast<std::size_t>(k)) {
    hits.resize(static_cast<std::size_t>(k));
  }
  return hits;
}

void EmbeddingIndex::save(const fs::path& path) const {
  std::string blob;
  blob.append(kIndexMagic, sizeof kIndexMagic);
  const auto put_u32 = [&](std::uint32_t v) {
    char bytes[4];
    std::memcpy(bytes, &v, 4);
    blob.append(bytes, 4);
  };
  put_u32(kIndexVersion);
  put_u32(static_cast<std::uint32_t>(dimension()));
  put_u32(static_cast<std::uint32_t>(size()));
  for (const auto& row : vectors_) {
    blob.append(reinterpret_cast<const char*>(row.data()),
                row.size() * sizeof(double));
  }
  write_file_atomic(path, blob);

  Json vocab = Json::array();
  for (std::size_t i = 0; i < vectorizer_.vocab().size(); ++i) {
    vocab.push_back(Json{vectorizer_.vocab()[i], vectorizer_.idf()[i]});
  }
  const Json sidecar{{"vectorizer_id", vectorizer_id_},
                     {"version", kIndexVersion},
                     {"dim", dimension()},
                     {"pair_ids", pair_ids_},
                     {"vocab", vocab}};
  write_file_atomic(path.string() + ".meta.json", sidecar.dump(2) + "\n");
}

EmbeddingIndex EmbeddingIndex::load(const fs::path& path) {
  const std::string blob = read_file(path);
  if (blob.size() < sizeof(kIndexMagic) + 12 ||
      std::memcmp(blob.data(), kIndexMagic, sizeof kIndexMagic) != 0) {
    throw std::runtime_error("not an embedding index: " + path.string());
  }
  const auto get_u32 = [&](std::size_t offset) {
    std::uint32_t v;
    std::memcpy(&v, blob.data() + offset, 4);
    return v;
  };
  const std::uint32_t version = get_u32(sizeof kIndexMagic);
  if (version != kIndexVersion) {
    throw std::runtime_error("unsupported index version " +
                             std::to_string(version));
  }
  const std::uint32_t dim = get_u32(sizeof kIndexMagic + 4);
  const std::uint32_t n = get_u32(sizeof kIndexMagic + 8);
  const std::size_t header = sizeof(kIndexMagic) + 12;
  const std::size_t expected =
      header + std::size_t(dim) * std::size_t(n) * sizeof(double);
  if (blob.size() != expected) {
    throw std::runtime_error("truncated embedding index: " + path.string());
  }

  const Json sidecar = Json::parse(read_file(path.string() + ".meta.json"));
  std::vector<std::string> vocab;
  std::vector<double> idf;
  for (const auto& entry : sidecar.at("vocab")) {
    vocab.push_back(entry.at(0).get<std::string>());
    idf.push_back(entry.at(1).get<double>());
  }
  if (vocab.size() != dim) {
    throw std::runtime_error("sidecar vocab does not match index dimension");
  }

  EmbeddingIndex index;
  index.vectorizer_ = TfidfVectorizer::from_state(std::move(vocab),
                                                  std::move(idf));
  index.vectorizer_id_ = sidecar.at("vectorizer_id").get<std::string>();
  index.pair_ids_ =
      sidecar.at("pair_ids").get<std::vector<std::string>>();
  if (index.pair_ids_.size() != n) {
    throw std::runtime_error("sidecar ids do not match index row count");
  }
  index.vectors_.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    index.vectors_[i].resize(dim);
    std::memcpy(index.vectors_[i].data(),
                blob.data() + header + std::size_t(i) * dim * sizeof(double),
                std::size_t(dim) * sizeof(double));
  }
  return index;
}

}  // namespace perfedit
