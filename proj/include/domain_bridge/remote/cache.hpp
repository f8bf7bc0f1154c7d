// Copyright 2026 The Domain Bridge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <utility>

#include "domain_bridge/canonical_json.hpp"
#include "domain_bridge/errors.hpp"
#include "domain_bridge/remote/codec.hpp"

namespace domain_bridge::remote {

/// Digest of a request's canonical JSON form; the cache key and the
/// idempotency key of the corresponding request.
inline std::string argument_digest(const Json& args) { return sha256_hex(canonical_dump(args)); }

/// Write-once map (kind, argument digest) -> response bytes, optionally
/// mirrored to a directory so later processes start warm. Readers run
/// concurrently; writers are serialized.
class ResponseCache {
 public:
  ResponseCache() = default;
  explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(*dir_);
  }

  /// Directory from DOMAIN_BRIDGE_CACHE_DIR, memory-only when unset.
  static std::shared_ptr<ResponseCache> from_environment() {
    const char* dir = std::getenv("DOMAIN_BRIDGE_CACHE_DIR");
    if (dir && *dir) return std::make_shared<ResponseCache>(std::filesystem::path(dir));
    return std::make_shared<ResponseCache>();
  }

  std::optional<std::string> get(const std::string& kind, const std::string& digest) const {
    {
      std::shared_lock lock(mu_);
      if (auto it = mem_.find({kind, digest}); it != mem_.end()) {
        ++hits_;
        return it->second;
      }
    }
    if (dir_) {
      std::ifstream in(file_for(kind, digest), std::ios::binary);
      if (in) {
        std::ostringstream ss;
        ss << in.rdbuf();
        std::unique_lock lock(mu_);
        auto [it, _] = mem_.emplace(std::make_pair(kind, digest), ss.str());
        ++hits_;
        return it->second;
      }
    }
    ++misses_;
    return std::nullopt;
  }

  /// First write wins. A later write with different bytes means the
  /// service answered the same request differently; it is counted and
  /// dropped.
  void put(const std::string& kind, const std::string& digest, const std::string& bytes) {
    std::unique_lock lock(mu_);
    if (auto [it, fresh] = mem_.emplace(std::make_pair(kind, digest), bytes); !fresh) {
      if (it->second != bytes) ++divergences_;
      return;
    }
    if (!dir_) return;
    const auto path = file_for(kind, digest);
    if (std::filesystem::exists(path)) return;
    std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << bytes;
      if (!out) throw Error("cannot write cache entry " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
  }

  std::uint64_t hits() const { return hits_.load(); }
  std::uint64_t misses() const { return misses_.load(); }
  std::uint64_t divergences() const { return divergences_.load(); }
  const std::optional<std::filesystem::path>& directory() const { return dir_; }

 private:
  std::filesystem::path file_for(const std::string& kind, const std::string& digest) const {
    return *dir_ / kind / (digest + ".json");
  }

  std::optional<std::filesystem::path> dir_;
  mutable std::shared_mutex mu_;
  mutable std::map<std::pair<std::string, std::string>, std::string> mem_;
  mutable std::atomic<std::uint64_t> hits_{0};
  mutable std::atomic<std::uint64_t> misses_{0};
  std::atomic<std::uint64_t> divergences_{0};
};

}  // namespace domain_bridge::remote
