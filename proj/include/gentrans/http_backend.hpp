#pragma once

// JSON-over-HTTP completion client. Field names, endpoint path and headers
// come from an endpoint config, so any text-completion server can be used
// without code changes.
//
// Endpoint config keys (KeyValueDoc grammar):
//   url                 scheme://host[:port]                 (required)
//   path                request path, default /v1/completions
//   timeout_seconds     connect/read/write timeout, default 60
//   api_key_env         environment variable holding the key; never logged
//   api_key_header      default Authorization
//   api_key_prefix      default "Bearer "
//   [headers]           extra request headers, name = value
//   [fields]            prompt, max_tokens, temperature, stop: request field
//                       names; response_text: dotted path into the response,
//                       numeric parts index arrays (default choices.0.text)
//   [body]              constant extra request fields (e.g. model = "...")
//   [retry]             max_attempts (5), base_seconds (1), factor (2)
//   max_requests        optional request cap, 0 = unlimited

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <string>
#include <thread>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "gentrans/backends.hpp"
#include "gentrans/error.hpp"
#include "gentrans/keyvalue.hpp"
#include "gentrans/text.hpp"

namespace gentrans {

struct RetryPolicy {
  std::size_t max_attempts = 5;
  std::chrono::duration<double> base{1.0};
  double factor = 2.0;

  /// Delay before attempt `attempt` + 1 (attempt counts from 1).
  std::chrono::duration<double> delay_after(std::size_t attempt) const {
    return base * std::pow(factor, static_cast<double>(attempt - 1));
  }
};

struct EndpointConfig {
  std::string url;
  std::string path = "/v1/completions";
  double timeout_seconds = 60.0;
  std::string api_key_env;
  std::string api_key_header = "Authorization";
  std::string api_key_prefix = "Bearer ";
  std::map<std::string, std::string> headers;
  std::string prompt_field = "prompt";
  std::string max_tokens_field = "max_tokens";
  std::string temperature_field = "temperature";
  std::string stop_field = "stop";
  std::string response_text_path = "choices.0.text";
  std::map<std::string, std::string> body;
  RetryPolicy retry;
  std::size_t max_requests = 0;

  static EndpointConfig from(const KeyValueDoc& doc) {
    EndpointConfig c;
    c.url = doc.require("url");
    c.path = doc.get_or("path", c.path);
    c.timeout_seconds = doc.get_double("timeout_seconds", c.timeout_seconds);
    c.api_key_env = doc.get_or("api_key_env", "");
    c.api_key_header = doc.get_or("api_key_header", c.api_key_header);
    c.api_key_prefix = doc.get_or("api_key_prefix", c.api_key_prefix);
    c.headers = doc.with_prefix("headers.");
    c.prompt_field = doc.get_or("fields.prompt", c.prompt_field);
    c.max_tokens_field = doc.get_or("fields.max_tokens", c.max_tokens_field);
    c.temperature_field = doc.get_or("fields.temperature", c.temperature_field);
    c.stop_field = doc.get_or("fields.stop", c.stop_field);
    c.response_text_path = doc.get_or("fields.response_text", c.response_text_path);
    c.body = doc.with_prefix("body.");
    c.retry.max_attempts = doc.get_uint("retry.max_attempts", c.retry.max_attempts);
    c.retry.base = std::chrono::duration<double>(doc.get_double("retry.base_seconds", c.retry.base.count()));
    c.retry.factor = doc.get_double("retry.factor", c.retry.factor);
    c.max_requests = doc.get_uint("max_requests", 0);
    if (c.retry.max_attempts < 1) throw Error(ErrorKind::InvalidConfig, "retry.max_attempts must be >= 1");
    if (c.timeout_seconds <= 0) throw Error(ErrorKind::InvalidConfig, "timeout_seconds must be > 0");
    return c;
  }

  static EndpointConfig load(const std::string& path) { return from(KeyValueDoc::load(path)); }
};

/// Follows a dotted path ("choices.0.text") through a JSON value.
inline const nlohmann::json* json_at_path(const nlohmann::json& root, std::string_view path) {
  const nlohmann::json* cur = &root;
  for (const auto& part : text::split(path, '.')) {
    if (cur->is_array()) {
      char* end = nullptr;
      const unsigned long idx = std::strtoul(part.c_str(), &end, 10);
      if (part.empty() || *end != '\0' || idx >= cur->size()) return nullptr;
      cur = &(*cur)[idx];
    } else if (cur->is_object()) {
      auto it = cur->find(part);
      if (it == cur->end()) return nullptr;
      cur = &*it;
    } else {
      return nullptr;
    }
  }
  return cur;
}

class HttpBackend final : public CompletionBackend {
 public:
  using Sleeper = std::function<void(std::chrono::duration<double>)>;

  explicit HttpBackend(EndpointConfig config, Sleeper sleeper = {})
      : config_(std::move(config)), sleeper_(std::move(sleeper)) {
    if (!sleeper_) {
      sleeper_ = [](std::chrono::duration<double> d) { std::this_thread::sleep_for(d); };
    }
    if (!config_.api_key_env.empty()) {
      if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
    }
  }

  std::string id() const override { return "http:" + config_.url + config_.path; }

  std::string request_body(const CompletionRequest& req) const {
    nlohmann::json j;
    for (const auto& [k, v] : config_.body) j[k] = v;
    j[config_.prompt_field] = req.prompt;
    j[config_.max_tokens_field] = req.max_tokens;
    j[config_.temperature_field] = req.temperature;
    if (!config_.stop_field.empty()) j[config_.stop_field] = req.stop;
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
  }

  /// Retries connection failures, timeouts, 429 and 5xx with exponential
  /// backoff; other statuses fail immediately.
  CompletionResult complete(const CompletionRequest& request) override {
    validate(request);
    if (config_.max_requests && sent_.fetch_add(1) >= config_.max_requests) {
      throw Error(ErrorKind::BudgetExceeded, "request cap of " + std::to_string(config_.max_requests) + " reached");
    }
    const auto body = request_body(request);
    const auto started = std::chrono::steady_clock::now();

    httplib::Headers headers;
    for (const auto& [k, v] : config_.headers) headers.emplace(k, v);
    if (!api_key_.empty()) headers.emplace(config_.api_key_header, config_.api_key_prefix + api_key_);

    std::exception_ptr last;
    for (std::size_t attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
      if (attempt > 1) sleeper_(config_.retry.delay_after(attempt - 1));

      httplib::Client client(config_.url);
      const auto timeout = std::chrono::duration<double>(config_.timeout_seconds);
      const auto secs = static_cast<time_t>(timeout.count());
      const auto usecs = static_cast<time_t>((timeout.count() - static_cast<double>(secs)) * 1e6);
      client.set_connection_timeout(secs, usecs);
      client.set_read_timeout(secs, usecs);
      client.set_write_timeout(secs, usecs);

      auto res = client.Post(config_.path, headers, body, "application/json");
      if (!res) {
        last = std::make_exception_ptr(Error(ErrorKind::Timeout, "request failed: " + httplib::to_string(res.error())));
        continue;
      }
      if (res->status >= 200 && res->status < 300) {
        return {extract_text(res->body, request), id(),
                std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started),
                attempt};
      }
      RemoteError err(res->status, res->body.substr(0, 200));
      if (res->status != 429 && res->status < 500) throw err;
      last = std::make_exception_ptr(err);
    }
    std::rethrow_exception(last);
  }

 private:
  std::string extract_text(const std::string& body, const CompletionRequest& request) const {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception&) {
      throw RemoteError(200, "response is not JSON: " + body.substr(0, 200));
    }
    const auto* node = json_at_path(j, config_.response_text_path);
    if (!node || !node->is_string()) {
      throw RemoteError(200, "response lacks '" + config_.response_text_path + "': " + body.substr(0, 200));
    }
    return truncate_at_stop(node->get<std::string>(), request.stop);
  }

  EndpointConfig config_;
  Sleeper sleeper_;
  std::string api_key_;
  std::atomic<std::size_t> sent_{0};
};

}  // namespace gentrans
