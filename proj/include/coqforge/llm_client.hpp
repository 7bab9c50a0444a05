#pragma once

// Client for OpenAI-style chat-completion endpoints, shared by the polisher
// and the prediction generator.

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <future>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include "coqforge/error.hpp"
#include "json.hpp"

namespace coqforge {

inline constexpr std::string_view kDefaultApiKeyEnv = "COQ_FORGE_API_KEY";

struct LlmClientConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-3.5-turbo";
  /// Empty disables the Authorization header (local servers).
  std::string api_key_env = std::string(kDefaultApiKeyEnv);
  double temperature = 0.7;
  std::size_t max_response_length = 512;
  double timeout_seconds = 60.0;
  std::size_t max_retries = 3;
  std::size_t max_in_flight = 4;
  /// 0 disables rate limiting.
  double requests_per_minute = 60.0;
  /// First retry delay; doubles on every further attempt.
  double retry_backoff_ms = 500.0;

  /// Throws ConfigError on a violated invariant.
  void validate() const;

  /// Missing keys keep their defaults; unknown keys are ignored.
  static LlmClientConfig from_json(const nlohmann::json& j);
  static LlmClientConfig load(const std::filesystem::path& path);
};

class PolishError : public Error {
 public:
  enum class Kind {
    Transient,  // timeouts, 5xx, connection failures after all retries
    Fatal,      // auth/quota and other 4xx; aborts the run
    Empty,      // the model answered with blank text
  };

  PolishError(Kind kind, const std::string& what, int status = 0)
      : Error(what), kind_(kind), status_(status) {}

  Kind kind() const { return kind_; }
  int status() const { return status_; }

 private:
  Kind kind_;
  int status_;
};

/// Spaces requests at least 60/rpm seconds apart (a token bucket of depth
/// one), so any observed window respects the configured rate.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_minute);
  void acquire();

 private:
  using Clock = std::chrono::steady_clock;
  std::mutex mutex_;
  Clock::duration interval_{};
  std::optional<Clock::time_point> last_;
};

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

/// Append-only on-disk key/value log. Each line is
/// {"key": ..., "value": ..., "created_at": <unix seconds>}; later lines win.
/// Without a directory the cache lives in memory only.
class PolishCache {
 public:
  PolishCache() = default;
  explicit PolishCache(const std::filesystem::path& directory);

  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, const std::string& value);
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::unordered_map<std::string, std::string> entries_;
  std::filesystem::path log_path_;
  std::ofstream log_;
};

struct ChatRequest {
  std::string prompt;
  double temperature = 0.7;
  std::size_t max_tokens = 512;
  std::optional<double> top_p;
};

/// Builds the JSON request body for `request`.
nlohmann::json chat_request_body(std::string_view model, const ChatRequest& request);

/// Extracts choices[0].message.content; std::nullopt when the body has no
/// such field.
std::optional<std::string> chat_response_text(std::string_view body);

/// Thread-safe chat client with retries and rate limiting.
class LlmClient {
 public:
  /// Reads the API key from the configured environment variable; throws
  /// ConfigError when it is unset.
  explicit LlmClient(LlmClientConfig config);

  const LlmClientConfig& config() const { return config_; }

  /// Returns the raw message text (not trimmed). Throws PolishError
  /// Transient once retries are exhausted, Fatal on auth/quota errors.
  std::string complete(const ChatRequest& request);

  std::size_t requests_sent() const { return requests_sent_.load(); }

 private:
  LlmClientConfig config_;
  std::string api_key_;
  std::string base_url_;
  std::string path_;
  RateLimiter limiter_;
  std::atomic<std::size_t> requests_sent_{0};
};

}  // namespace coqforge
