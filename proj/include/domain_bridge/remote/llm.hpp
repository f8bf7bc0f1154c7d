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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "domain_bridge/canonical_json.hpp"
#include "domain_bridge/errors.hpp"
#include "domain_bridge/oracles.hpp"
#include "domain_bridge/remote/cache.hpp"
#include "domain_bridge/remote/codec.hpp"
#include "domain_bridge/remote/http.hpp"
#include "domain_bridge/types.hpp"

#ifndef DOMAIN_BRIDGE_PROMPT_DIR
#define DOMAIN_BRIDGE_PROMPT_DIR "data/prompts"
#endif

namespace domain_bridge::remote {

inline constexpr std::string_view kRepairInstruction = "Reply with ONLY a JSON array of strings.";

/// The system prompt plus one user template per rewriting kind, read from
/// `<dir>/{system,summarize,group,enrich}.txt`. Templates use `{{field}}`
/// placeholders.
class PromptSet {
 public:
  static PromptSet load(const std::filesystem::path& dir = DOMAIN_BRIDGE_PROMPT_DIR) {
    PromptSet p;
    for (const char* name : {"system", "summarize", "group", "enrich"}) {
      std::ifstream in(dir / (std::string(name) + ".txt"), std::ios::binary);
      if (!in) throw InvalidInput("missing prompt template " + (dir / (std::string(name) + ".txt")).string());
      std::ostringstream ss;
      ss << in.rdbuf();
      p.text_[name] = ss.str();
    }
    return p;
  }

  static PromptSet from_strings(std::map<std::string, std::string> texts) {
    PromptSet p;
    for (const char* name : {"system", "summarize", "group", "enrich"})
      if (!texts.count(name)) throw InvalidInput(std::string("missing prompt template ") + name);
    p.text_ = std::move(texts);
    return p;
  }

  const std::string& text(const std::string& name) const { return text_.at(name); }

  /// SHA-256 of each template, keyed "prompt/<name>", for recording in trees.
  std::map<std::string, std::string> digests() const {
    std::map<std::string, std::string> out;
    for (const auto& [k, v] : text_) out["prompt/" + k] = sha256_hex(v);
    return out;
  }

  std::string render(const std::string& name, const Json& fields) const {
    const std::string& t = text(name);
    std::string out;
    std::size_t pos = 0;
    while (true) {
      const auto open = t.find("{{", pos);
      const auto close = open == std::string::npos ? open : t.find("}}", open);
      if (close == std::string::npos) break;
      out.append(t, pos, open - pos);
      const std::string key = t.substr(open + 2, close - open - 2);
      if (!fields.contains(key)) throw InvalidInput("prompt '" + name + "' needs field '" + key + "'");
      const Json& v = fields[key];
      out += v.is_string() ? v.get<std::string>() : v.dump();
      pos = close + 2;
    }
    out.append(t, pos, std::string::npos);
    return out;
  }

 private:
  std::map<std::string, std::string> text_;
};

/// Parses a reply as a JSON array of strings. A single surrounding code
/// fence is tolerated. Returns nullopt for anything else.
inline std::optional<std::vector<std::string>> parse_string_array(std::string_view content) {
  std::string s(content);
  auto trim = [](std::string& t) {
    const auto b = t.find_first_not_of(" \t\r\n");
    const auto e = t.find_last_not_of(" \t\r\n");
    t = b == std::string::npos ? std::string{} : t.substr(b, e - b + 1);
  };
  trim(s);
  if (s.rfind("```", 0) == 0 && s.size() >= 6 && s.compare(s.size() - 3, 3, "```") == 0) {
    const auto nl = s.find('\n');
    if (nl == std::string::npos) return std::nullopt;
    s = s.substr(nl + 1, s.size() - 3 - nl - 1);
    trim(s);
  }
  Json j;
  try {
    j = Json::parse(s);
  } catch (const Json::parse_error&) {
    return std::nullopt;
  }
  if (!j.is_array()) return std::nullopt;
  std::vector<std::string> out;
  for (const auto& x : j) {
    if (!x.is_string()) return std::nullopt;
    out.push_back(x.get<std::string>());
  }
  return out;
}

/// Chat-completion client for the summarize/group/enrich rewrites.
class LlmClient {
 public:
  using Log = std::function<void(std::string_view)>;

  LlmClient(std::shared_ptr<HttpTransport> transport, std::shared_ptr<ResponseCache> cache, PromptSet prompts,
            Log log = {})
      : http_(std::move(transport)), cache_(std::move(cache)), prompts_(std::move(prompts)), log_(std::move(log)) {}

  std::optional<std::vector<Description>> cached(const std::string& kind, const Json& fields) const {
    auto bytes = cache_->get("llm_" + kind, key(kind, fields));
    if (!bytes) return std::nullopt;
    const auto parsed = parse_string_array(*bytes);
    if (!parsed) throw OracleProtocolError("cache entry for llm " + kind + " is not a string array");
    return canonicalize(*parsed);
  }

  /// Renders the template, queries the endpoint, and makes one repair
  /// round-trip if the reply is not a JSON array of strings.
  std::vector<Description> fetch(const std::string& kind, const Json& fields) const {
    const std::string digest = key(kind, fields);
    Json messages = Json::array({{{"role", "system"}, {"content", prompts_.text("system")}},
                                 {{"role", "user"}, {"content", prompts_.render(kind, fields)}}});
    std::string reply = complete(messages, digest);
    auto parsed = parse_string_array(reply);
    if (!parsed) {
      messages.push_back({{"role", "assistant"}, {"content", reply}});
      messages.push_back({{"role", "user"}, {"content", std::string(kRepairInstruction)}});
      reply = complete(messages, digest + "-repair");
      parsed = parse_string_array(reply);
    }
    if (!parsed) {
      if (log_) log_("llm " + kind + " reply after repair: " + reply);
      throw OracleProtocolError("llm " + kind + ": reply is not a JSON array of strings after one repair");
    }
    auto out = canonicalize(*parsed);
    Json stored = Json::array();
    for (const auto& d : out) stored.push_back(d.text());
    cache_->put("llm_" + kind, digest, stored.dump());
    return out;
  }

  const PromptSet& prompts() const { return prompts_; }
  const HttpTransport& transport() const { return *http_; }

 private:
  std::string key(const std::string& kind, const Json& fields) const {
    const auto d = prompts_.digests();
    return argument_digest({{"model", http_->config().model_name},
                            {"kind", kind},
                            {"system", d.at("prompt/system")},
                            {"template", d.at("prompt/" + kind)},
                            {"fields", fields}});
  }

  std::string complete(const Json& messages, const std::string& idempotency_key) const {
    const Json body = {{"model", http_->config().model_name}, {"messages", messages}, {"temperature", 0}};
    const Json resp = http_->post("/chat/completions", body, idempotency_key);
    try {
      const Json& content = resp.at("choices").at(0).at("message").at("content");
      return content.get<std::string>();
    } catch (const Json::exception&) {
      throw OracleProtocolError("llm: response lacks choices[0].message.content");
    }
  }

  static std::vector<Description> canonicalize(const std::vector<std::string>& raw) {
    std::vector<Description> out;
    for (const auto& s : raw) {
      try {
        out.emplace_back(s);
      } catch (const InvalidInput&) {
        // Blank entries carry no description.
      }
    }
    return dedupe_descriptions(std::move(out));
  }

  std::shared_ptr<HttpTransport> http_;
  std::shared_ptr<ResponseCache> cache_;
  PromptSet prompts_;
  Log log_;
};

namespace detail {

inline Json summarize_fields(const Description& p, std::size_t l, std::size_t max_words) {
  return {{"text", p.text()}, {"l", l}, {"max_words", max_words}};
}
inline Json group_fields(const std::vector<Description>& in, std::size_t target_count) {
  Json texts = Json::array();
  for (const auto& d : in) texts.push_back(d.text());
  return {{"texts", texts}, {"target_count", target_count}};
}
inline Json enrich_fields(const Description& p, std::size_t n) { return {{"text", p.text()}, {"n_variants", n}}; }

}  // namespace detail

class LlmSummarizer final : public Summarizer {
 public:
  explicit LlmSummarizer(std::shared_ptr<const LlmClient> c) : c_(std::move(c)) {}

 protected:
  std::optional<std::vector<Description>> lookup(const Description& p, std::size_t l,
                                                 std::size_t max_words) const override {
    return c_->cached("summarize", detail::summarize_fields(p, l, max_words));
  }
  std::vector<Description> compute(const Description& p, std::size_t l, std::size_t max_words) const override {
    return c_->fetch("summarize", detail::summarize_fields(p, l, max_words));
  }

 private:
  std::shared_ptr<const LlmClient> c_;
};

class LlmGrouper final : public Grouper {
 public:
  explicit LlmGrouper(std::shared_ptr<const LlmClient> c) : c_(std::move(c)) {}

 protected:
  std::optional<std::vector<Description>> lookup(const std::vector<Description>& in,
                                                 std::size_t target_count) const override {
    return c_->cached("group", detail::group_fields(in, target_count));
  }
  std::vector<Description> compute(const std::vector<Description>& in, std::size_t target_count) const override {
    auto out = c_->fetch("group", detail::group_fields(in, target_count));
    if (out.empty()) throw OracleProtocolError("llm group: empty reply");
    return out;
  }

 private:
  std::shared_ptr<const LlmClient> c_;
};

class LlmEnricher final : public Enricher {
 public:
  explicit LlmEnricher(std::shared_ptr<const LlmClient> c) : c_(std::move(c)) {}

 protected:
  std::optional<std::vector<Description>> lookup(const Description& p, std::size_t n) const override {
    return c_->cached("enrich", detail::enrich_fields(p, n));
  }
  std::vector<Description> compute(const Description& p, std::size_t n) const override {
    return c_->fetch("enrich", detail::enrich_fields(p, n));
  }

 private:
  std::shared_ptr<const LlmClient> c_;
};

/// One-shot rewrite call with a memory-only cache and the bundled prompts.
/// `kind` is one of "summarize", "group", "enrich"; `fields` must carry the
/// kind's template fields.
inline std::vector<Description> llm_batch(const std::string& kind, const Json& fields, const EndpointConfig& cfg) {
  static const std::map<std::string, std::vector<std::string>> kRequired = {
      {"summarize", {"text", "l", "max_words"}}, {"group", {"texts", "target_count"}}, {"enrich", {"text", "n_variants"}}};
  const auto it = kRequired.find(kind);
  if (it == kRequired.end()) throw InvalidInput("unknown llm kind '" + kind + "'");
  for (const auto& f : it->second)
    if (!fields.contains(f)) throw InvalidInput("llm " + kind + " requires field '" + f + "'");
  LlmClient client(std::make_shared<HttpTransport>(cfg), std::make_shared<ResponseCache>(), PromptSet::load());
  return client.fetch(kind, fields);
}

}  // namespace domain_bridge::remote
