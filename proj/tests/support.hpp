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

// Test-side oracles and fixtures. Nothing here calls the engine's objective,
// classifier or brute-force code; the naive routines recompute everything
// from the universe's raw token vectors with plain loops.

#pragma once

#include <algorithm>
#include <unistd.h>

#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "domain_bridge/canonical_json.hpp"
#include "domain_bridge/remote/codec.hpp"
#include "domain_bridge/synthetic/universe.hpp"
#include "httplib.h"

namespace domain_bridge {
// Readable gtest output for descriptions.
inline void PrintTo(const Description& d, std::ostream* os) { *os << '"' << d.text() << '"'; }
}  // namespace domain_bridge

namespace testing_support {

using domain_bridge::Json;
namespace syn = domain_bridge::synthetic;

// ---------------------------------------------------------------------------
// Naive synthetic oracle

inline std::vector<double> naive_sum(const syn::Universe& u, const std::vector<std::size_t>& toks) {
  std::vector<double> s(u.dim(), 0.0);
  for (auto t : toks)
    for (std::size_t d = 0; d < u.dim(); ++d) s[d] += u.token_vector(t)[d];
  return s;
}

inline double naive_cos(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

/// Label per the universe definition: nearest centroid if close enough,
/// else the background label (= number of classes).
inline std::size_t naive_label(const syn::Universe& u, const std::vector<double>& v) {
  const auto& spec = u.spec();
  std::size_t best = 0;
  double best_cos = -2;
  for (std::size_t c = 0; c < spec.classes.size(); ++c) {
    const double x = naive_cos(v, naive_sum(u, spec.classes[c].required_tokens));
    if (x > best_cos) {
      best_cos = x;
      best = c;
    }
  }
  return best_cos >= spec.accept_threshold ? best : spec.classes.size();
}

struct NaiveValue {
  std::size_t k = 0;
  double relevance = 0, penalty = 0, value = 0;
};

inline NaiveValue naive_objective(const syn::Universe& u, const std::vector<std::size_t>& toks, std::size_t cls,
                                  double lambda, double g, const std::vector<std::uint64_t>& rel_seeds,
                                  const std::vector<std::uint64_t>& gen_seeds) {
  std::string text;
  for (auto t : toks) text += (text.empty() ? "" : " ") + syn::token_name(t, u.vocab_size());
  const domain_bridge::Description p(text);
  NaiveValue r;
  for (auto s : rel_seeds)
    if (naive_label(u, u.decode_vector(p, s, g)) == cls) ++r.k;
  const auto e = naive_sum(u, toks);
  double sum = 0;
  for (auto s : gen_seeds) sum += naive_cos(u.decode_vector(p, s, g), e);
  r.relevance = double(r.k) / double(rel_seeds.size());
  r.penalty = sum / double(gen_seeds.size());
  r.value = r.relevance - lambda * r.penalty;
  return r;
}

/// Plain bitmask enumeration of every token set of size 1..L. Returns the
/// best token set under the documented tie-break (fewest tokens, then
/// lexicographic rendering) and its value.
inline std::pair<std::vector<std::size_t>, NaiveValue> naive_brute_force(
    const syn::Universe& u, std::size_t cls, double lambda, double g, const std::vector<std::uint64_t>& rel,
    const std::vector<std::uint64_t>& gen) {
  const std::size_t T = u.vocab_size(), L = u.spec().max_tokens;
  std::vector<std::size_t> best;
  NaiveValue best_v;
  std::string best_text;
  bool have = false;
  for (std::uint64_t mask = 1; mask < (1ULL << T); ++mask) {
    const auto n = static_cast<std::size_t>(std::popcount(mask));
    if (n > L) continue;
    std::vector<std::size_t> toks;
    std::string text;
    for (std::size_t t = 0; t < T; ++t)
      if (mask >> t & 1) {
        toks.push_back(t);
        text += (text.empty() ? "" : " ") + syn::token_name(t, T);
      }
    const auto v = naive_objective(u, toks, cls, lambda, g, rel, gen);
    const bool better = !have || v.value > best_v.value ||
                        (v.value == best_v.value &&
                         (toks.size() < best.size() || (toks.size() == best.size() && text < best_text)));
    if (better) {
      best = toks;
      best_v = v;
      best_text = text;
      have = true;
    }
  }
  return {best, best_v};
}

// ---------------------------------------------------------------------------
// Target with a known acceptance probability

/// Payload is 8 bytes of a hash of (description, seed); nothing else.
class HashDecoder final : public domain_bridge::Decoder {
 public:
  domain_bridge::Sample generate(const domain_bridge::Description& p, std::uint64_t seed, double) const override {
    std::uint64_t h = domain_bridge::mix64(domain_bridge::fnv1a64(p.text()) ^ domain_bridge::mix64(seed));
    std::vector<std::uint8_t> bytes(8);
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<std::uint8_t>(h >> (8 * i));
    return domain_bridge::Sample(std::move(bytes), seed, p);
  }
};

/// Labels a sample 0 with probability rho over hash-uniform payloads, else 1.
class RhoTarget final : public domain_bridge::TargetModel {
 public:
  explicit RhoTarget(double rho) : rho_(rho) {}
  std::optional<std::size_t> num_classes() const override { return 2; }

 private:
  domain_bridge::ClassLabel compute(const domain_bridge::Sample& x) const override {
    std::uint64_t h = 0;
    for (std::size_t i = 0; i < x.payload.size(); ++i) h |= std::uint64_t(x.payload[i]) << (8 * i);
    const double u = double(domain_bridge::mix64(h) >> 11) * 0x1.0p-53;
    return domain_bridge::ClassLabel{u < rho_ ? 0u : 1u};
  }
  double rho_;
};

/// Decoder and target only; the other slots stay empty.
inline domain_bridge::OracleSuite rho_suite(double rho) {
  domain_bridge::OracleSuite s;
  s.decoder = std::make_shared<HashDecoder>();
  s.target = std::make_shared<RhoTarget>(rho);
  return s;
}

// ---------------------------------------------------------------------------
// Independent validator of serialized trees

/// Checks, on the JSON form only, that every scored node that was not
/// terminated hangs under a non-terminated parent with strictly smaller
/// relevance, or that both sit at relevance 1. Returns the violations.
inline std::vector<std::string> path_monotonicity_violations(const Json& tree) {
  std::map<std::uint64_t, Json> by_id;
  for (const auto& n : tree.at("nodes")) by_id[n.at("id").get<std::uint64_t>()] = n;
  std::vector<std::string> bad;
  for (const auto& [id, n] : by_id) {
    if (n.at("parent_id").is_null() || n.at("relevance").is_null()) continue;
    if (n.at("status") == "terminated") continue;
    const Json& p = by_id.at(n.at("parent_id").get<std::uint64_t>());
    if (p.at("status") == "terminated") {
      bad.push_back("node " + std::to_string(id) + " survives under a terminated parent");
      continue;
    }
    const auto ck = n["relevance"]["k"].get<std::uint64_t>(), cm = n["relevance"]["m"].get<std::uint64_t>();
    const auto pk = p["relevance"]["k"].get<std::uint64_t>(), pm = p["relevance"]["m"].get<std::uint64_t>();
    const bool strictly_up = ck * pm > pk * cm;
    const bool saturated = ck == cm && pk == pm;
    if (!strictly_up && !saturated) bad.push_back("node " + std::to_string(id) + " does not improve on its parent");
  }
  return bad;
}

// ---------------------------------------------------------------------------
// Local HTTP servers

struct RecordedRequest {
  std::string method, path, body, idempotency_key, authorization;
};

/// httplib server on an ephemeral port, running on its own thread. Every
/// request is recorded before the handler runs.
class MockServer {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  explicit MockServer(Handler h) : handler_(std::move(h)) {
    auto wrap = [this](const httplib::Request& req, httplib::Response& res) {
      {
        std::lock_guard lock(mu_);
        log_.push_back({req.method, req.path, req.body, req.get_header_value("X-Idempotency-Key"),
                        req.get_header_value("Authorization")});
      }
      handler_(req, res);
    };
    server_.Get(".*", wrap);
    server_.Post(".*", wrap);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockServer() {
    server_.stop();
    thread_.join();
  }

  std::string url(const std::string& prefix = "") const {
    return "http://127.0.0.1:" + std::to_string(port_) + prefix;
  }
  std::vector<RecordedRequest> requests() const {
    std::lock_guard lock(mu_);
    return log_;
  }
  std::size_t request_count() const {
    std::lock_guard lock(mu_);
    return log_.size();
  }

 private:
  Handler handler_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  mutable std::mutex mu_;
  std::vector<RecordedRequest> log_;
};

inline void reply_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void reply_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  reply_json(res, status, {{"error", {{"code", code}, {"message", message}}}});
}

// PNG signature followed by the synthetic payload: enough for the adapter's
// format check, trivially reversible by the mock.
inline constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

/// Shim protocol served from a synthetic universe.
inline MockServer::Handler synthetic_shim(std::shared_ptr<const syn::Universe> u, std::string backend = "synthetic") {
  return [u, backend](const httplib::Request& req, httplib::Response& res) {
    namespace rb = domain_bridge::remote;
    auto image = [&](const Json& body) {
      auto bytes = rb::base64_decode(body.at("image_b64").get<std::string>());
      bytes.erase(bytes.begin(), bytes.begin() + 8);
      return u->decode_payload(bytes);
    };
    try {
      if (req.path == "/v1/info") {
        return reply_json(res, 200, {{"dim", u->dim()}, {"num_classes", u->spec().classes.size() + 1},
                                     {"backend", backend}});
      }
      const Json body = Json::parse(req.body);
      if (req.path == "/v1/decode") {
        const double g = (body.at("generality_level").get<int>() - 1) / 11.0;
        const domain_bridge::Description p(body.at("description").get<std::string>());
        const auto seed = body.at("seed").get<std::uint64_t>();
        auto bytes = u->encode_payload(u->decode_vector(p, seed, g));
        bytes.insert(bytes.begin(), std::begin(kPngSignature), std::end(kPngSignature));
        return reply_json(res, 200, {{"image_b64", rb::base64_encode(bytes)}, {"format", "png"}, {"seed", seed}});
      }
      if (req.path == "/v1/embed_text") {
        const auto e = u->embed_text(domain_bridge::Description(body.at("text").get<std::string>()));
        return reply_json(res, 200, {{"embedding", std::vector<double>(e.values().begin(), e.values().end())},
                                     {"dim", e.dim()}});
      }
      if (req.path == "/v1/embed_image") {
        const auto e = image(body);
        return reply_json(res, 200, {{"embedding", std::vector<double>(e.values().begin(), e.values().end())},
                                     {"dim", e.dim()}});
      }
      if (req.path == "/v1/caption") return reply_json(res, 200, {{"description", u->caption(image(body)).text()}});
      if (req.path == "/v1/classify") return reply_json(res, 200, {{"label", u->classify(image(body)).index}});
      reply_error(res, 404, "not_found", req.path);
    } catch (const std::exception& e) {
      reply_error(res, 400, "bad_request", e.what());
    }
  };
}

/// Prompt templates whose rendered text is trivially machine-readable, so a
/// scripted LLM can recover the fields.
inline std::map<std::string, std::string> scripted_prompt_texts() {
  return {{"system", "scripted"},
          {"summarize", "summarize\n{{text}}\n{{l}}\n{{max_words}}"},
          {"group", "group\n{{texts}}\n{{target_count}}"},
          {"enrich", "enrich\n{{text}}\n{{n_variants}}"}};
}

inline void write_prompt_dir(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [k, v] : scripted_prompt_texts()) std::ofstream(dir / (k + ".txt")) << v;
}

inline Json chat_reply(const std::string& content) {
  return {{"id", "mock"},
          {"object", "chat.completion"},
          {"choices", Json::array({{{"index", 0},
                                    {"message", {{"role", "assistant"}, {"content", content}}},
                                    {"finish_reason", "stop"}}})}};
}

/// Chat endpoint answering the scripted prompts with the synthetic
/// universe's word-set rewrites.
inline MockServer::Handler synthetic_llm(std::shared_ptr<const syn::Universe> u) {
  return [u](const httplib::Request& req, httplib::Response& res) {
    const Json body = Json::parse(req.body);
    std::istringstream in(body.at("messages").back().at("content").get<std::string>());
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    std::vector<domain_bridge::Description> out;
    if (lines.at(0) == "summarize") {
      out = u->summarize(domain_bridge::Description(lines.at(1)), std::stoul(lines.at(2)), std::stoul(lines.at(3)));
    } else if (lines.at(0) == "group") {
      std::vector<domain_bridge::Description> in_texts;
      for (const auto& t : Json::parse(lines.at(1))) in_texts.emplace_back(t.get<std::string>());
      out = u->group(in_texts, std::stoul(lines.at(2)));
    } else {
      out = u->enrich(domain_bridge::Description(lines.at(1)), std::stoul(lines.at(2)));
    }
    Json arr = Json::array();
    for (const auto& d : out) arr.push_back(d.text());
    reply_json(res, 200, chat_reply(arr.dump()));
  };
}

inline std::filesystem::path fresh_temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  auto dir = std::filesystem::temp_directory_path() /
             ("domain_bridge_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing_support
