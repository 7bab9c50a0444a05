#include "coqforge/llm_client.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

#include "httplib.h"

namespace coqforge {
namespace {

// Splits "http://host:port/path" into ("http://host:port", "/path").
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
  const auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos)
    throw ConfigError("endpoint '" + endpoint + "' has no scheme (expected http:// or https://)");
  const std::string scheme = endpoint.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https")
    throw ConfigError("endpoint '" + endpoint + "' must use http or https");
  const auto path_start = endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {endpoint, "/"};
  return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

bool transient_status(int status) { return status >= 500 || status == 408; }

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<T>();
}

}  // namespace

void LlmClientConfig::validate() const {
  if (max_in_flight < 1) throw ConfigError("client config: max_in_flight must be >= 1");
  if (!(timeout_seconds > 0)) throw ConfigError("client config: timeout must be > 0");
  if (temperature < 0) throw ConfigError("client config: temperature must be >= 0");
  if (requests_per_minute < 0) throw ConfigError("client config: requests_per_minute must be >= 0");
  if (model.empty()) throw ConfigError("client config: model name is empty");
  split_endpoint(endpoint);
}

LlmClientConfig LlmClientConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("client config must be a JSON object");
  LlmClientConfig c;
  try {
    read_field(j, "endpoint", c.endpoint);
    read_field(j, "model", c.model);
    read_field(j, "api_key_env", c.api_key_env);
    read_field(j, "temperature", c.temperature);
    read_field(j, "max_response_length", c.max_response_length);
    read_field(j, "timeout_seconds", c.timeout_seconds);
    read_field(j, "max_retries", c.max_retries);
    read_field(j, "max_in_flight", c.max_in_flight);
    read_field(j, "requests_per_minute", c.requests_per_minute);
    read_field(j, "retry_backoff_ms", c.retry_backoff_ms);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("client config: ") + e.what());
  }
  c.validate();
  return c;
}

LlmClientConfig LlmClientConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read client config " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("client config " + path.string() + " is not valid JSON");
  return from_json(j);
}

RateLimiter::RateLimiter(double requests_per_minute) {
  if (requests_per_minute > 0)
    interval_ = std::chrono::duration_cast<Clock::duration>(
        std::chrono::duration<double>(60.0 / requests_per_minute));
}

void RateLimiter::acquire() {
  if (interval_ == Clock::duration::zero()) return;
  Clock::time_point slot;
  {
    std::lock_guard lock(mutex_);
    const auto now = Clock::now();
    slot = last_ ? std::max(now, *last_ + interval_) : now;
    last_ = slot;
  }
  std::this_thread::sleep_until(slot);
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 computation failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

PolishCache::PolishCache(const std::filesystem::path& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw IoError("cannot create cache directory " + directory.string() + ": " + ec.message());
  log_path_ = directory / "polish_cache.jsonl";
  if (std::ifstream in(log_path_); in) {
    std::string line;
    while (std::getline(in, line)) {
      // A torn final line from an interrupted run is ignored.
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object() || !j.contains("key") || !j.contains("value")) continue;
      if (!j["key"].is_string() || !j["value"].is_string()) continue;
      entries_[j["key"].get<std::string>()] = j["value"].get<std::string>();
    }
  }
  log_.open(log_path_, std::ios::binary | std::ios::app);
  if (!log_) throw IoError("cannot open cache log " + log_path_.string());
}

std::optional<std::string> PolishCache::get(const std::string& key) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void PolishCache::put(const std::string& key, const std::string& value) {
  std::lock_guard lock(mutex_);
  entries_[key] = value;
  if (!log_.is_open()) return;
  const auto now = std::chrono::duration_cast<std::chrono::seconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
  nlohmann::ordered_json entry{{"key", key}, {"value", value}, {"created_at", now}};
  log_ << entry.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
  log_.flush();
  if (!log_) throw IoError("cannot append to cache log " + log_path_.string());
}

std::size_t PolishCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

nlohmann::json chat_request_body(std::string_view model, const ChatRequest& request) {
  nlohmann::json body{
      {"model", model},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
      {"temperature", request.temperature},
      {"max_tokens", request.max_tokens},
  };
  if (request.top_p) body["top_p"] = *request.top_p;
  return body;
}

std::optional<std::string> chat_response_text(std::string_view body) {
  auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  auto choices = j.find("choices");
  if (choices == j.end() || !choices->is_array() || choices->empty()) return std::nullopt;
  const auto& first = (*choices)[0];
  if (!first.is_object()) return std::nullopt;
  auto message = first.find("message");
  if (message == first.end() || !message->is_object()) return std::nullopt;
  auto content = message->find("content");
  if (content == message->end() || !content->is_string()) return std::nullopt;
  return content->get<std::string>();
}

LlmClient::LlmClient(LlmClientConfig config)
    : config_(std::move(config)), limiter_(config_.requests_per_minute) {
  config_.validate();
  if (!config_.api_key_env.empty()) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0')
      throw ConfigError("API key environment variable " + config_.api_key_env + " is not set");
    api_key_ = key;
  }
  std::tie(base_url_, path_) = split_endpoint(config_.endpoint);
}

std::string LlmClient::complete(const ChatRequest& request) {
  const std::string body = chat_request_body(config_.model, request).dump(
      -1, ' ', false, nlohmann::json::error_handler_t::replace);
  std::string last_error;
  for (std::size_t attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      const double delay_ms = config_.retry_backoff_ms * std::pow(2.0, double(attempt - 1));
      std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(delay_ms));
    }
    limiter_.acquire();

    httplib::Client http(base_url_);
    const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::duration<double>(config_.timeout_seconds));
    http.set_connection_timeout(timeout);
    http.set_read_timeout(timeout);
    http.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    ++requests_sent_;
    auto result = http.Post(path_, headers, body, "application/json");
    if (!result) {
      last_error = "request failed: " + httplib::to_string(result.error());
      continue;
    }
    const int status = result->status;
    if (status >= 200 && status < 300) {
      auto text = chat_response_text(result->body);
      if (!text) {
        last_error = "response has no choices[0].message.content";
        continue;
      }
      return *text;
    }
    if (transient_status(status)) {
      last_error = "HTTP " + std::to_string(status);
      continue;
    }
    throw PolishError(PolishError::Kind::Fatal,
                      "endpoint rejected the request with HTTP " + std::to_string(status), status);
  }
  throw PolishError(PolishError::Kind::Transient,
                    "giving up after " + std::to_string(config_.max_retries + 1) +
                        " attempts: " + last_error);
}

}  // namespace coqforge
