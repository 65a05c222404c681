#include "perfedit/gen_client.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "perfedit/hash.hpp"
#include "perfedit/jsonl.hpp"

namespace perfedit {

namespace fs = std::filesystem;

std::string canonical_request_json(const GenRequest& req) {
  // Plain nlohmann::json orders keys lexicographically, which is exactly
  // the canonical form wanted for hashing.
  nlohmann::json j{{"prompt", req.prompt},
                   {"n", req.n},
                   {"temperature", req.temperature},
                   {"top_p", req.top_p},
                   {"max_tokens", req.max_tokens},
                   {"stop", req.stop}};
  return j.dump();
}

std::string request_digest(const GenRequest& req) {
  return sha256_hex(canonical_request_json(req));
}

std::string to_string(GenErrorKind kind) {
  switch (kind) {
    case GenErrorKind::Config:
      return "config";
    case GenErrorKind::Auth:
      return "auth";
    case GenErrorKind::RateLimited:
      return "rate_limited";
    case GenErrorKind::Transport:
      return "transport";
    case GenErrorKind::MalformedResponse:
      return "malformed_response";
  }
  throw std::logic_error("unreachable GenErrorKind");
}

namespace {

struct ParsedUrl {
  std::string base;  // scheme://host[:port]
  std::string path;
};

Result<ParsedUrl, GenError> parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    return GenError{GenErrorKind::Config, "endpoint URL has no scheme: " + url};
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    return ParsedUrl{url, "/"};
  }
  return ParsedUrl{url.substr(0, path_start), url.substr(path_start)};
}

void validate_request(const GenRequest& req, int n_cap) {
  if (req.prompt.empty()) throw std::invalid_argument("empty prompt");
  if (req.n < 1) throw std::invalid_argument("n must be >= 1");
  if (req.n > n_cap) {
    throw std::invalid_argument("n exceeds configured cap of " +
                                std::to_string(n_cap));
  }
  if (req.temperature < 0.0) {
    throw std::invalid_argument("temperature must be >= 0");
  }
  if (req.top_p <= 0.0 || req.top_p > 1.0) {
    throw std::invalid_argument("top_p must be in (0, 1]");
  }
}

}  // namespace

GenClient::GenClient(GenClientConfig config) : config_(std::move(config)) {
  if (config_.max_in_flight < 1) {
    throw std::invalid_argument("max_in_flight must be >= 1");
  }
}

Result<GenResponse, GenError> GenClient::generate(const GenRequest& req) {
  validate_request(req, config_.n_cap);

  const std::string digest = request_digest(req);
  fs::path cache_path;
  if (!config_.cache_dir.empty()) {
    cache_path = config_.cache_dir / digest.substr(0, 2) / (digest + ".json");
    if (fs::exists(cache_path)) {
      try {
        const Json entry = Json::parse(read_file(cache_path));
        GenResponse response;
        response.samples =
            entry.at("response").at("samples").get<std::vector<std::string>>();
        response.usage = entry.at("response").value("usage", Json::object());
        response.shortfall = entry.at("response").value("shortfall", 0);
        response.from_cache = true;
        return response;
      } catch (const std::exception&) {
        // A corrupt entry falls through to a live request and is rewritten.
      }
    }
  }

  {
    std::unique_lock lock(in_flight_mutex_);
    in_flight_cv_.wait(lock,
                       [&] { return in_flight_ < config_.max_in_flight; });
    ++in_flight_;
  }
  struct InFlightRelease {
    GenClient* self;
    ~InFlightRelease() {
      std::lock_guard lock(self->in_flight_mutex_);
      --self->in_flight_;
      self->in_flight_cv_.notify_one();
    }
  } release{this};

  Result<GenResponse, GenError> last =
      GenError{GenErrorKind::Transport, "no attempt made"};
  double backoff = config_.initial_backoff_s;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
      backoff *= 2.0;
    }
    last = post_once(req);
    if (last.ok()) break;
    const auto kind = last.error().kind;
    const bool transient =
        kind == GenErrorKind::Transport || kind == GenErrorKind::RateLimited;
    if (!transient) break;
  }
  if (!last.ok()) return last;

  if (!cache_path.empty()) {
    const Json entry{
        {"request", Json::parse(canonical_request_json(req))},
        {"response",
         Json{{"samples", last.value().samples},
              {"usage", last.value().usage},
              {"shortfall", last.value().shortfall}}},
        {"timestamp",
         std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
             .count()}};
    write_file_atomic(cache_path, entry.dump() + "\n");
  }
  return last;
}

Result<GenResponse, GenError> GenClient::post_once(const GenRequest& req) {
  auto url = parse_url(config_.endpoint_url);
  if (!url.ok()) return url.error();

  httplib::Client client(url.value().base);
  client.set_connection_timeout(10);
  client.set_read_timeout(300);

  httplib::Headers headers;
  if (!config_.auth_token_env.empty()) {
    if (const char* token = std::getenv(config_.auth_token_env.c_str());
        token != nullptr && token[0] != '\0') {
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }
  }

  const auto start = std::chrono::steady_clock::now();
  auto http_result = client.Post(url.value().path, headers,
                                 canonical_request_json(req),
                                 "application/json");
  const double latency =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();

  if (!http_result) {
    return GenError{GenErrorKind::Transport,
                    "connection failed: " +
                        httplib::to_string(http_result.error())};
  }
  const int status = http_result->status;
  if (status == 401 || status == 403) {
    return GenError{GenErrorKind::Auth,
                    "authentication rejected (HTTP " +
                        std::to_string(status) + ")"};
  }
  if (status == 429) {
    return GenError{GenErrorKind::RateLimited, "HTTP 429"};
  }
  if (status >= 500) {
    return GenError{GenErrorKind::Transport,
                    "server error (HTTP " + std::to_string(status) + ")"};
  }
  if (status != 200) {
    return GenError{GenErrorKind::MalformedResponse,
                    "unexpected HTTP status " + std::to_string(status)};
  }

  Json body = Json::parse(http_result->body, nullptr,
                          /*allow_exceptions=*/false);
  if (body.is_discarded() || !body.contains("samples") ||
      !body["samples"].is_array()) {
    return GenError{GenErrorKind::MalformedResponse,
                    "response body is not {samples: [...]}"};
  }
  GenResponse response;
  for (const auto& sample : body["samples"]) {
    if (!sample.is_string()) {
      return GenError{GenErrorKind::MalformedResponse,
                      "non-string sample in response"};
    }
    if (response.samples.size() <
        static_cast<std::size_t>(req.n)) {
      response.samples.push_back(sample.get<std::string>());
    }
  }
  response.shortfall = req.n - static_cast<int>(response.samples.size());
  if (body.contains("usage")) response.usage = body["usage"];
  response.latency_s = latency;
  return response;
}

Result<std::string, ExtractError> extract_program(std::string_view sample) {
  // Fences are lines whose first non-blank characters are ```.
  std::vector<std::pair<std::size_t, std::size_t>> blocks;  // [begin, end)
  std::size_t pos = 0;
  std::optional<std::size_t> open_content_start;
  while (pos <= sample.size()) {
    const std::size_t eol = sample.find('\n', pos);
    const std::size_t line_end =
        (eol == std::string_view::npos) ? sample.size() : eol;
    std::string_view line = sample.substr(pos, line_end - pos);
    const std::size_t first = line.find_first_not_of(" \t\r");
    const bool is_fence =
        first != std::string_view::npos && line.substr(first).starts_with("```");
    if (is_fence) {
      if (!open_content_start) {
        open_content_start = (eol == std::string_view::npos)
                                 ? sample.size()
                                 : eol + 1;
      } else {
        blocks.emplace_back(*open_content_start, pos);
        open_content_start.reset();
      }
    }
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
  if (open_content_start) {
    // Unterminated final block runs to the end of the sample.
    blocks.emplace_back(*open_content_start, sample.size());
  }

  std::string extracted;
  if (blocks.empty()) {
    extracted = std::string(sample);
  } else {
    const auto [begin, end] = blocks.back();
    extracted = std::string(sample.substr(begin, end - begin));
    while (!extracted.empty() &&
           (extracted.back() == '\n' || extracted.back() == '\r')) {
      extracted.pop_back();
    }
  }
  if (extracted.find_first_not_of(" \t\r\n") == std::string::npos) {
    return ExtractError{"empty extraction"};
  }
  return extracted;
}

}  // namespace perfedit
