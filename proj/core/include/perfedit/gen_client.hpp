#pragma once

#include <condition_variable>
#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include "perfedit/result.hpp"
#include "perfedit/types.hpp"

namespace perfedit {

struct GenRequest {
  std::string prompt;
  int n = 1;
  double temperature = 0.7;  // Best@k sampling default
  double top_p = 1.0;
  int max_tokens = 1024;
  std::vector<std::string> stop;
};

/// Sampling configuration used when prompting for new self-play programs
/// (as opposed to Best@k evaluation sampling above).
inline constexpr double kSelfPlayTemperature = 1.0;
inline constexpr double kSelfPlayTopP = 0.9;
inline constexpr int kSelfPlaySamplesPerPrompt = 5;

/// Canonical request encoding (sorted keys); the cache key is its digest,
/// so any change to the request payload invalidates stale entries.
std::string canonical_request_json(const GenRequest& req);
std::string request_digest(const GenRequest& req);

enum class GenErrorKind {
  Config,
  Auth,
  RateLimited,
  Transport,
  MalformedResponse,
};

std::string to_string(GenErrorKind kind);

struct GenError {
  GenErrorKind kind;
  std::string detail;
};

struct GenResponse {
  std::vector<std::string> samples;
  Json usage = Json::object();
  double latency_s = 0.0;
  /// n minus the number of samples actually returned; recorded, never
  /// silently dropped.
  int shortfall = 0;
  bool from_cache = false;
};

struct GenClientConfig {
  /// Full URL of the generation endpoint, e.g. http://127.0.0.1:8080/generate.
  std::string endpoint_url;
  /// Name of the environment variable holding the bearer token; unset or
  /// empty means unauthenticated requests.
  std::string auth_token_env;
  int max_in_flight = 4;
  /// Replay cache root; empty disables caching. Layout:
  /// cache/<first2-of-digest>/<digest>.json with {request, response,
  /// timestamp}. With the cache populated, runs are reproducible offline.
  std::filesystem::path cache_dir;
  int max_retries = 4;
  double initial_backoff_s = 0.5;
  int n_cap = 64;
};

/// Thin JSON-over-HTTP client for a text-generation endpoint. The wire
/// shape is {prompt, n, temperature, top_p, max_tokens, stop} in, and
/// {samples: [...], usage?} out; adapters for other APIs sit behind this
/// shape, not in front of it.
class GenClient {
 public:
  explicit GenClient(GenClientConfig config);

  /// Transient failures (connect errors, 429, 5xx) are retried with
  /// bounded exponential backoff; auth failures are not.
  Result<GenResponse, GenError> generate(const GenRequest& req);

  const GenClientConfig& config() const { return config_; }

 private:
  Result<GenResponse, GenError> post_once(const GenRequest& req);

  GenClientConfig config_;

  std::mutex in_flight_mutex_;
  std::condition_variable in_flight_cv_;
  int in_flight_ = 0;
};

struct ExtractError {
  std::string reason;
};

/// Pulls the candidate program out of a model sample: the content of the
/// last fenced code block when fences are present (prose around blocks is
/// dropped), otherwise the sample unchanged. An empty extraction is an
/// error; downstream treats such candidates as incorrect.
Result<std::string, ExtractError> extract_program(std::string_view sample);

}  // namespace perfedit
