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

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "domain_bridge/canonical_json.hpp"
#include "domain_bridge/errors.hpp"
#include "domain_bridge/oracles.hpp"
#include "domain_bridge/remote/suite.hpp"
#include "domain_bridge/synthetic/universe.hpp"
#include "domain_bridge/types.hpp"

#ifndef DOMAIN_BRIDGE_DATA_DIR
#define DOMAIN_BRIDGE_DATA_DIR "data"
#endif

namespace domain_bridge::cli {

enum class OracleMode { kSynthetic, kRemote };

/// Parsed investigation manifest. Relative paths are resolved against the
/// manifest's directory.
struct RunManifest {
  Config config;
  OracleMode mode = OracleMode::kSynthetic;
  std::optional<synthetic::UniverseSpec> universe;
  std::optional<remote::RemoteSettings> remote;
  std::vector<ClassLabel> classes;
  std::vector<Description> initial;
  std::map<OracleKind, std::uint64_t> budget_limits;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InvalidInput("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Json parse_json_file(const std::filesystem::path& p) {
  const std::string text = read_file(p);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(p.string() + ": " + e.what());
  }
}

/// One description per non-blank line.
inline std::vector<Description> read_word_list(const std::filesystem::path& p) {
  std::istringstream in(read_file(p));
  std::vector<Description> out;
  for (std::string line; std::getline(in, line);) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) out.emplace_back(line);
  }
  return dedupe_descriptions(std::move(out));
}

inline std::optional<OracleKind> parse_oracle_kind(std::string_view s) {
  for (std::size_t i = 0; i < kOracleKindCount; ++i) {
    if (oracle_kind_name(static_cast<OracleKind>(i)) == s) return static_cast<OracleKind>(i);
  }
  return std::nullopt;
}

inline RunManifest parse_manifest(const Json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ParseError("manifest: expected object");
  RunManifest m;
  m.config = Config::from_json(j.value("config", Json::object()), "manifest.config");

  const std::string mode = j.value("oracle_mode", std::string{});
  if (mode == "synthetic") {
    m.mode = OracleMode::kSynthetic;
    if (!j.contains("universe_file") || !j["universe_file"].is_string())
      throw ParseError("manifest.universe_file: required for synthetic mode");
    if (j.contains("shim") || j.contains("llm")) throw ParseError("manifest: synthetic mode takes no endpoints");
    m.universe = synthetic::universe_from_json(parse_json_file(base_dir / j["universe_file"].get<std::string>()));
  } else if (mode == "remote") {
    m.mode = OracleMode::kRemote;
    if (j.contains("universe_file")) throw ParseError("manifest: remote mode takes no universe_file");
    if (!j.contains("shim") || !j.contains("llm")) throw ParseError("manifest: remote mode needs 'shim' and 'llm'");
    remote::RemoteSettings r{.shim = remote::EndpointConfig::from_json(j["shim"], "manifest.shim"),
                             .llm = remote::EndpointConfig::from_json(j["llm"], "manifest.llm")};
    if (j.contains("prompt_dir")) r.prompt_dir = base_dir / j["prompt_dir"].get<std::string>();
    m.remote = std::move(r);
  } else {
    throw ParseError("manifest.oracle_mode: expected \"synthetic\" or \"remote\"");
  }

  if (!j.contains("classes") || !j["classes"].is_array() || j["classes"].empty())
    throw ParseError("manifest.classes: expected a non-empty array of class indices");
  for (const auto& c : j["classes"]) {
    if (!c.is_number_unsigned()) throw ParseError("manifest.classes: expected non-negative integers");
    m.classes.push_back(ClassLabel{c.get<std::size_t>()});
  }
  if (m.universe) {
    for (auto c : m.classes)
      if (c.index >= m.universe->classes.size())
        throw ParseError("manifest.classes: class " + std::to_string(c.index) + " not in universe");
  }

  if (!j.contains("initial_descriptions")) throw ParseError("manifest.initial_descriptions: missing");
  const Json& init = j["initial_descriptions"];
  if (init.is_string()) {
    const std::string preset = init.get<std::string>();
    if (preset == "imagenet-1000") {
      m.initial = read_word_list(std::filesystem::path(DOMAIN_BRIDGE_DATA_DIR) / "imagenet-1000.txt");
    } else if (preset == "vocabulary" && m.universe) {
      for (std::size_t t = 0; t < m.universe->vocab_size; ++t)
        m.initial.emplace_back(synthetic::token_name(t, m.universe->vocab_size));
    } else {
      throw ParseError("manifest.initial_descriptions: unknown preset '" + preset + "'");
    }
  } else if (init.is_array()) {
    for (const auto& d : init) {
      if (!d.is_string()) throw ParseError("manifest.initial_descriptions: expected strings");
      try {
        m.initial.emplace_back(d.get<std::string>());
      } catch (const InvalidInput& e) {
        throw ParseError(std::string("manifest.initial_descriptions: ") + e.what());
      }
    }
    if (m.initial.empty()) throw ParseError("manifest.initial_descriptions: empty");
  } else {
    throw ParseError("manifest.initial_descriptions: expected a preset name or an array");
  }

  if (j.contains("budget")) {
    if (!j["budget"].is_object()) throw ParseError("manifest.budget: expected object");
    for (const auto& [k, v] : j["budget"].items()) {
      const auto kind = parse_oracle_kind(k);
      if (!kind) throw ParseError("manifest.budget: unknown oracle '" + k + "'");
      if (!v.is_number_unsigned()) throw ParseError("manifest.budget." + k + ": expected non-negative integer");
      m.budget_limits[*kind] = v.get<std::uint64_t>();
    }
  }
  return m;
}

inline RunManifest load_manifest(const std::filesystem::path& path) {
  return parse_manifest(parse_json_file(path), path.parent_path());
}

struct ActiveSuite {
  OracleSuite suite;
  std::map<std::string, std::string> template_digests;
};

/// Instantiates the manifest's oracles with a fresh budget carrying the
/// manifest's limits. Remote mode contacts the shim.
inline ActiveSuite make_active_suite(const RunManifest& m) {
  ActiveSuite a;
  if (m.mode == OracleMode::kSynthetic) {
    a.suite = synthetic::build_universe(*m.universe);
  } else {
    auto r = remote::make_remote_suite(*m.remote);
    a.suite = std::move(r.suite);
    a.template_digests = std::move(r.template_digests);
  }
  for (const auto& [kind, limit] : m.budget_limits) a.suite.budget->set_limit(kind, limit);
  return a;
}

}  // namespace domain_bridge::cli
