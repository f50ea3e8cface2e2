#pragma once

// Builds the backend stack a manifest asks for:
//   kind = replay, mode = replay          replay store only (no network)
//   kind = replay, mode = record*         replay store in front of an HTTP endpoint
//   kind = http                           HTTP endpoint only
// An optional max_requests cap wraps whatever talks to the network.

#include <memory>
#include <string>

#include "gentrans/backends.hpp"
#include "gentrans/experiments.hpp"
#include "gentrans/http_backend.hpp"

namespace gentrans {

class BackendStack {
 public:
  CompletionBackend& get() { return *top_; }

  static BackendStack from_manifest(const RunManifest& m) {
    BackendStack s;
    const auto& b = m.backend;
    if (b.kind == "http") {
      s.live(m, m.resolve(b.endpoint));
      s.top_ = s.network_;
      return s;
    }
    if (b.kind != "replay") throw Error(ErrorKind::InvalidConfig, "unknown backend kind '" + b.kind + "'");
    if (b.store.empty()) throw Error(ErrorKind::InvalidConfig, "backend.store is required for replay backends");
    return replay(m, m.resolve(b.store), b.mode, b.mode == ReplayMode::Replay ? std::string() : m.resolve(b.endpoint));
  }

  /// Replay store at `store_path`; `endpoint_path` is required unless mode is Replay.
  static BackendStack replay(const RunManifest& m, const std::string& store_path, ReplayMode mode,
                             const std::string& endpoint_path) {
    BackendStack s;
    s.store_ = ReplayStore::open(store_path, mode);
    if (mode != ReplayMode::Replay) {
      if (endpoint_path.empty()) throw Error(ErrorKind::InvalidConfig, "recording needs an endpoint config");
      s.live(m, endpoint_path);
    }
    s.top_ = std::make_shared<ReplayBackend>(s.store_, s.network_);
    return s;
  }

 private:
  void live(const RunManifest& m, const std::string& endpoint_path) {
    if (endpoint_path.empty()) throw Error(ErrorKind::InvalidConfig, "backend.endpoint is required");
    auto cfg = EndpointConfig::load(endpoint_path);
    if (m.backend.max_requests && (!cfg.max_requests || m.backend.max_requests < cfg.max_requests)) {
      cfg.max_requests = m.backend.max_requests;
    }
    network_ = std::make_shared<HttpBackend>(std::move(cfg));
  }

  std::shared_ptr<ReplayStore> store_;
  std::shared_ptr<CompletionBackend> network_;
  std::shared_ptr<CompletionBackend> top_;
};

}  // namespace gentrans
