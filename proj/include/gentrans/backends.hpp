#pragma once

// The completion contract every backend implements, request canonicalization
// and digests, the JSON-lines replay store, and bounded fan-out.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gentrans/digest.hpp"
#include "gentrans/error.hpp"
#include "gentrans/text.hpp"

namespace gentrans {

struct CompletionRequest {
  std::string prompt;
  std::size_t max_tokens = 256;
  double temperature = 0.0;
  std::vector<std::string> stop = {"\n\n", "English:"};
};

struct CompletionResult {
  std::string text;
  std::string backend_id;
  std::chrono::milliseconds latency{0};
  std::size_t attempt_count = 1;
};

inline void validate(const CompletionRequest& req) {
  if (req.max_tokens < 1) throw Error(ErrorKind::InvalidRequest, "max_tokens must be >= 1");
  if (!(req.temperature >= 0.0)) throw Error(ErrorKind::InvalidRequest, "temperature must be >= 0");
}

/// Canonical wire form: a JSON object with lexicographically sorted keys and
/// no insignificant whitespace. Every request field participates.
inline std::string canonical_json(const CompletionRequest& req) {
  nlohmann::json j;  // std::map-backed, so keys serialize sorted
  j["max_tokens"] = req.max_tokens;
  j["prompt"] = req.prompt;
  j["stop"] = req.stop;
  j["temperature"] = req.temperature;
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

inline std::string request_digest(const CompletionRequest& req) { return sha256_hex(canonical_json(req)); }

/// Reads a wire payload {prompt, max_tokens, temperature, stop}; key order and
/// whitespace are irrelevant.
inline CompletionRequest request_from_json(std::string_view payload) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(payload);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("request payload: ") + e.what());
  }
  if (!j.is_object() || !j.contains("prompt") || !j["prompt"].is_string()) {
    throw Error(ErrorKind::InvalidRequest, "request payload needs a string 'prompt'");
  }
  CompletionRequest req;
  try {
    req.prompt = j["prompt"].get<std::string>();
    if (j.contains("max_tokens")) req.max_tokens = j["max_tokens"].get<std::size_t>();
    if (j.contains("temperature")) req.temperature = j["temperature"].get<double>();
    if (j.contains("stop")) req.stop = j["stop"].get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidRequest, std::string("request payload: ") + e.what());
  }
  return req;
}

/// Cuts `text` at the earliest occurrence of any stop sequence.
inline std::string truncate_at_stop(std::string text, const std::vector<std::string>& stop) {
  std::size_t cut = text.size();
  for (const auto& s : stop) {
    if (s.empty()) continue;
    cut = std::min(cut, text.find(s));
  }
  text.resize(std::min(cut, text.size()));
  return text;
}

class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  /// Raw continuation for `request`, stop sequence excluded. Must be safe to
  /// call from several threads at once.
  virtual CompletionResult complete(const CompletionRequest& request) = 0;
  virtual std::string id() const = 0;
};

/// Adapts a plain function; used by tests and fixture generation.
class FunctionBackend final : public CompletionBackend {
 public:
  using Fn = std::function<std::string(const CompletionRequest&)>;
  FunctionBackend(std::string id, Fn fn) : id_(std::move(id)), fn_(std::move(fn)) {}

  CompletionResult complete(const CompletionRequest& request) override {
    validate(request);
    return {truncate_at_stop(fn_(request), request.stop), id_, {}, 1};
  }
  std::string id() const override { return id_; }

 private:
  std::string id_;
  Fn fn_;
};

/// Caps the number of requests forwarded to another backend.
class BudgetedBackend final : public CompletionBackend {
 public:
  BudgetedBackend(std::shared_ptr<CompletionBackend> inner, std::size_t max_requests)
      : inner_(std::move(inner)), max_requests_(max_requests) {}

  CompletionResult complete(const CompletionRequest& request) override {
    if (used_.fetch_add(1) >= max_requests_) {
      throw Error(ErrorKind::BudgetExceeded, "request cap of " + std::to_string(max_requests_) + " reached");
    }
    return inner_->complete(request);
  }
  std::string id() const override { return inner_->id(); }

 private:
  std::shared_ptr<CompletionBackend> inner_;
  std::size_t max_requests_;
  std::atomic<std::size_t> used_{0};
};

enum class ReplayMode { Replay, Record, RecordMissing };

inline ReplayMode parse_replay_mode(std::string_view s) {
  if (s == "replay") return ReplayMode::Replay;
  if (s == "record") return ReplayMode::Record;
  if (s == "record_missing") return ReplayMode::RecordMissing;
  throw Error(ErrorKind::InvalidConfig, "unknown replay mode '" + std::string(s) + "'");
}

/// Digest -> completion text, persisted as JSON lines {"digest", "text"}.
/// Inserts are collision-checked; writes are serialized.
class ReplayStore {
 public:
  explicit ReplayStore(ReplayMode mode = ReplayMode::Replay) : mode_(mode) {}

  /// Opens `path`. A missing file is an error only in Replay mode.
  static std::shared_ptr<ReplayStore> open(const std::string& path, ReplayMode mode) {
    auto store = std::make_shared<ReplayStore>(mode);
    std::ifstream probe(path, std::ios::binary);
    if (probe) {
      store->load_lines(text::read_file(path));
    } else if (mode == ReplayMode::Replay) {
      throw Error(ErrorKind::IoError, "replay store not found: " + path);
    }
    store->path_ = path;
    return store;
  }

  ReplayMode mode() const { return mode_; }

  std::optional<std::string> lookup(const std::string& digest) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(digest);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<std::string> lookup(const CompletionRequest& req) const { return lookup(request_digest(req)); }

  /// Persists digest(request) -> text. Idempotent for identical text.
  void record(const CompletionRequest& request, const std::string& text) {
    if (mode_ == ReplayMode::Replay) {
      throw Error(ErrorKind::InvalidConfig, "replay store opened read-only");
    }
    const auto digest = request_digest(request);
    std::lock_guard lock(mu_);
    if (!insert_locked(digest, text)) return;
    if (path_) {
      std::ofstream out(*path_, std::ios::binary | std::ios::app);
      if (!out) throw Error(ErrorKind::IoError, "cannot append to " + *path_);
      out << line_for(digest, text) << '\n';
      if (!out) throw Error(ErrorKind::IoError, "write failed for " + *path_);
    }
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
  }

  /// Whole store as JSON lines sorted by digest.
  std::string serialize() const {
    std::lock_guard lock(mu_);
    std::string out;
    for (const auto& [d, t] : entries_) out += line_for(d, t) + "\n";
    return out;
  }

  /// Rewrites the backing file in sorted order, dropping duplicate lines.
  void compact() const {
    if (path_) text::write_file(*path_, serialize());
  }

  void load_lines(std::string_view content) {
    std::lock_guard lock(mu_);
    std::size_t line_no = 0;
    for (const auto& line : text::split_lines(content)) {
      ++line_no;
      if (text::is_blank(line)) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, "replay store line " + std::to_string(line_no) + ": " + e.what());
      }
      if (!j.is_object() || !j.contains("digest") || !j.contains("text") || !j["digest"].is_string() ||
          !j["text"].is_string()) {
        throw Error(ErrorKind::ParseError, "replay store line " + std::to_string(line_no) + ": expected {digest, text}");
      }
      insert_locked(j["digest"].get<std::string>(), j["text"].get<std::string>());
    }
  }

 private:
  static std::string line_for(const std::string& digest, const std::string& text) {
    nlohmann::json j;
    j["digest"] = digest;
    j["text"] = text;
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
  }

  bool insert_locked(const std::string& digest, const std::string& text) {
    auto [it, inserted] = entries_.emplace(digest, text);
    if (!inserted && it->second != text) {
      throw Error(ErrorKind::DigestConflict, "digest " + digest.substr(0, 16) + " already maps to different text");
    }
    return inserted;
  }

  ReplayMode mode_;
  std::optional<std::string> path_;
  mutable std::mutex mu_;
  std::map<std::string, std::string> entries_;
};

/// Serves completions from a ReplayStore. In Record/RecordMissing mode the
/// inner backend is consulted (always / on a miss) and its answer stored.
class ReplayBackend final : public CompletionBackend {
 public:
  explicit ReplayBackend(std::shared_ptr<ReplayStore> store, std::shared_ptr<CompletionBackend> inner = nullptr)
      : store_(std::move(store)), inner_(std::move(inner)) {
    if (store_->mode() != ReplayMode::Replay && !inner_) {
      throw Error(ErrorKind::InvalidConfig, "recording requires an upstream backend");
    }
  }

  CompletionResult complete(const CompletionRequest& request) override {
    validate(request);
    const auto started = std::chrono::steady_clock::now();
    if (store_->mode() != ReplayMode::Record) {
      if (auto hit = store_->lookup(request)) {
        return {*hit, id(), elapsed(started), 1};
      }
      if (store_->mode() == ReplayMode::Replay) {
        throw Error(ErrorKind::MissingFixture, "no recorded completion for digest " + request_digest(request));
      }
    }
    auto result = inner_->complete(request);
    store_->record(request, result.text);
    result.backend_id = id();
    return result;
  }

  std::string id() const override { return inner_ ? "replay+" + inner_->id() : std::string("replay"); }

 private:
  static std::chrono::milliseconds elapsed(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - since);
  }

  std::shared_ptr<ReplayStore> store_;
  std::shared_ptr<CompletionBackend> inner_;
};

/// Runs fn(0..n-1) on at most `parallelism` threads. Results must be written
/// by index. If any call throws, the exception from the lowest index is
/// rethrown after all workers finish.
template <class Fn>
void run_bounded(std::size_t n, std::size_t parallelism, Fn&& fn) {
  if (n == 0) return;
  parallelism = std::max<std::size_t>(1, std::min(parallelism, n));
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (parallelism == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(parallelism);
    for (std::size_t t = 0; t < parallelism; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace gentrans
