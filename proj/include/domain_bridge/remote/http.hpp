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
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <thread>

#include "domain_bridge/canonical_json.hpp"
#include "domain_bridge/errors.hpp"
#include "httplib.h"

namespace domain_bridge::remote {

struct EndpointConfig {
  std::string base_url;
  std::optional<std::string> api_key;
  std::string model_name;
  std::chrono::milliseconds timeout{60'000};
  int max_retries = 3;
  std::chrono::milliseconds backoff{1'000};
  int max_in_flight = 4;

  void validate() const {
    if (base_url.rfind("http://", 0) != 0 && base_url.rfind("https://", 0) != 0)
      throw InvalidInput("endpoint base_url must start with http:// or https://");
    if (timeout.count() <= 0) throw InvalidInput("endpoint timeout must be positive");
    if (max_retries < 0) throw InvalidInput("endpoint max_retries must be >= 0");
    if (backoff.count() < 0) throw InvalidInput("endpoint backoff must be >= 0");
    if (max_in_flight < 1) throw InvalidInput("endpoint max_in_flight must be >= 1");
  }

  /// Durations are given in seconds. The API key is never read from files;
  /// `api_key_env` names the variable to take it from instead.
  static EndpointConfig from_json(const Json& j, const std::string& where) {
    if (!j.is_object()) throw ParseError(where + ": expected an object");
    EndpointConfig c;
    auto seconds = [&](const char* key, std::chrono::milliseconds& out) {
      if (!j.contains(key)) return;
      if (!j[key].is_number()) throw ParseError(where + "." + key + ": expected a number of seconds");
      out = std::chrono::milliseconds(static_cast<long long>(std::llround(j[key].get<double>() * 1000.0)));
    };
    try {
      c.base_url = j.at("base_url").get<std::string>();
      c.model_name = j.value("model_name", std::string{});
      c.max_retries = j.value("max_retries", c.max_retries);
      c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
      if (j.contains("api_key_env")) {
        const auto var = j["api_key_env"].get<std::string>();
        if (const char* v = std::getenv(var.c_str()); v && *v) c.api_key = v;
      }
    } catch (const Json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
    seconds("timeout_s", c.timeout);
    seconds("backoff_s", c.backoff);
    try {
      c.validate();
    } catch (const InvalidInput& e) {
      throw ParseError(where + ": " + e.what());
    }
    return c;
  }
};

/// JSON-over-HTTP client with bounded concurrency and retries. Transport
/// failures, 408, 429 and 5xx are retried with doubling backoff; any other
/// non-200 status fails at once. Every attempt of a POST carries the same
/// idempotency key.
class HttpTransport {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit HttpTransport(EndpointConfig cfg)
      : cfg_(std::move(cfg)), slots_(std::make_unique<std::counting_semaphore<>>(0)) {
    cfg_.validate();
    slots_->release(cfg_.max_in_flight);
    const auto scheme_end = cfg_.base_url.find("://") + 3;
    const auto path_start = cfg_.base_url.find('/', scheme_end);
    origin_ = cfg_.base_url.substr(0, path_start);
    if (path_start != std::string::npos) prefix_ = cfg_.base_url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }

  Json post(const std::string& path, const Json& body, const std::string& idempotency_key) const {
    return send(path, &body, idempotency_key);
  }
  Json get(const std::string& path) const { return send(path, nullptr, {}); }

  /// Number of HTTP attempts made, including failed ones.
  std::uint64_t network_calls() const { return calls_.load(); }
  const EndpointConfig& config() const { return cfg_; }
  void set_sleeper(Sleeper s) { sleep_ = std::move(s); }

 private:
  Json send(const std::string& path, const Json* body, const std::string& key) const {
    const std::string target = prefix_ + path;
    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
      if (attempt > 0) sleep_(cfg_.backoff * (1LL << std::min(attempt - 1, 20)));
      httplib::Result res = attempt_once(target, body, key);
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 200) {
        try {
          return Json::parse(res->body);
        } catch (const Json::parse_error&) {
          throw OracleProtocolError(target + ": response body is not JSON");
        }
      }
      last_error = "HTTP " + std::to_string(res->status) + describe_error(res->body);
      const bool retryable = res->status == 408 || res->status == 429 || res->status >= 500;
      if (!retryable) break;
    }
    throw OracleUnavailable(origin_ + target + ": " + last_error);
  }

  httplib::Result attempt_once(const std::string& target, const Json* body, const std::string& key) const {
    slots_->acquire();
    struct Release {
      std::counting_semaphore<>* s;
      ~Release() { s->release(); }
    } release{slots_.get()};
    ++calls_;
    httplib::Client cli(origin_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg_.timeout - secs);
    cli.set_connection_timeout(secs.count(), usecs.count());
    cli.set_read_timeout(secs.count(), usecs.count());
    cli.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (cfg_.api_key) headers.emplace("Authorization", "Bearer " + *cfg_.api_key);
    if (!key.empty()) headers.emplace("X-Idempotency-Key", key);
    if (body) return cli.Post(target, headers, body->dump(), "application/json");
    return cli.Get(target, headers);
  }

  static std::string describe_error(const std::string& body) {
    try {
      const auto j = Json::parse(body);
      const auto& e = j.at("error");
      return " (" + e.at("code").get<std::string>() + ": " + e.at("message").get<std::string>() + ")";
    } catch (const Json::exception&) {
      return {};
    }
  }

  EndpointConfig cfg_;
  std::string origin_;
  std::string prefix_;
  std::unique_ptr<std::counting_semaphore<>> slots_;
  mutable std::atomic<std::uint64_t> calls_{0};
  Sleeper sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
};

}  // namespace domain_bridge::remote
