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

#include <algorithm>
#include <cctype>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "domain_bridge/canonical_json.hpp"
#include "domain_bridge/errors.hpp"

namespace domain_bridge {

// ---------------------------------------------------------------------------
// Hashing helpers shared by seed derivation, config digests and the synthetic
// universe. FNV-1a is used for text keys; splitmix64 finalizes integers.

inline constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                       std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::string to_hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ---------------------------------------------------------------------------

/// Canonical textual description: trimmed, single-spaced, ASCII-lowercased.
/// Never empty.
class Description {
 public:
  explicit Description(std::string_view text) : text_(canonicalize(text)) {
    if (text_.empty()) throw InvalidInput("description is empty after canonicalization");
  }

  static std::string canonicalize(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (unsigned char c : text) {
      if (std::isspace(c)) {
        pending_space = !out.empty();
        continue;
      }
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    }
    return out;
  }

  const std::string& text() const { return text_; }

  std::vector<std::string> words() const {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text_.size()) {
      auto end = text_.find(' ', start);
      if (end == std::string::npos) end = text_.size();
      out.emplace_back(text_.substr(start, end - start));
      start = end + 1;
    }
    return out;
  }

  std::size_t word_count() const {
    return static_cast<std::size_t>(std::count(text_.begin(), text_.end(), ' ')) + 1;
  }

  auto operator<=>(const Description&) const = default;

 private:
  std::string text_;
};

/// Unit-norm vector in the shared text/image space.
class Embedding {
 public:
  explicit Embedding(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw InvalidInput("embedding has zero dimension");
    double sq = 0.0;
    for (double v : values_) sq += v * v;
    if (!(sq > 0.0) || !std::isfinite(sq)) throw InvalidInput("embedding is the zero vector");
    const double inv = 1.0 / std::sqrt(sq);
    for (double& v : values_) v *= inv;
  }

  std::span<const double> values() const { return values_; }
  std::size_t dim() const { return values_.size(); }

  /// Cosine similarity; both operands are unit norm, clamped to [-1, 1].
  double cosine(const Embedding& other) const {
    if (other.dim() != dim()) throw InvalidInput("embedding dimension mismatch");
    double dot = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) dot += values_[i] * other.values_[i];
    return std::clamp(dot, -1.0, 1.0);
  }

  bool operator==(const Embedding&) const = default;

 private:
  std::vector<double> values_;
};

/// Opaque generated datum plus its provenance.
struct Sample {
  std::vector<std::uint8_t> payload;
  std::uint64_t seed = 0;
  Description source_description;

  Sample(std::vector<std::uint8_t> bytes, std::uint64_t s, Description source)
      : payload(std::move(bytes)), seed(s), source_description(std::move(source)) {
    if (payload.empty()) throw MalformedSample("sample payload is empty");
  }

  bool operator==(const Sample&) const = default;
};

struct ClassLabel {
  std::size_t index = 0;
  auto operator<=>(const ClassLabel&) const = default;
};

/// Relevance as an exact ratio k/m.
struct Relevance {
  std::size_t k = 0;
  std::size_t m = 1;

  Relevance() = default;
  Relevance(std::size_t k_in, std::size_t m_in) : k(k_in), m(m_in) {
    if (m == 0 || k > m) throw InvalidInput("relevance requires 0 <= k <= m, m >= 1");
  }

  double value() const { return static_cast<double>(k) / static_cast<double>(m); }
  bool saturated() const { return k == m; }

  /// Exact comparison of k/m ratios by cross-multiplication.
  friend std::strong_ordering operator<=>(const Relevance& a, const Relevance& b) {
    return static_cast<unsigned __int128>(a.k) * b.m <=> static_cast<unsigned __int128>(b.k) * a.m;
  }
  friend bool operator==(const Relevance& a, const Relevance& b) {
    return (a <=> b) == std::strong_ordering::equal;
  }
};

struct ObjectiveValue {
  double relevance = 0.0;
  double penalty = 0.0;
  double lambda = 0.0;
  double value = 0.0;

  static ObjectiveValue make(double relevance, double penalty, double lambda) {
    return {relevance, penalty, lambda, relevance - lambda * penalty};
  }
};

// ---------------------------------------------------------------------------

struct Config {
  std::uint64_t run_seed = 0;
  std::size_t m_samples_per_node = 32;
  double lambda = 0.25;
  std::size_t n_final_samples = 64;
  std::size_t max_depth = 6;
  std::size_t enrich_depth_limit = 1;
  std::size_t enrich_variants = 3;
  std::size_t verbosity_threshold = 20;
  std::size_t l_summaries = 3;
  std::size_t group_threshold = 6;
  std::size_t group_target = 3;
  std::vector<double> generality_schedule{1.0, 0.7, 0.4, 0.2, 0.1, 0.0};
  std::size_t no_improvement_patience = 2;

  void validate() const {
    auto positive = [](std::size_t v, const char* name) {
      if (v < 1) throw InvalidInput(std::string("config.") + name + " must be >= 1");
    };
    positive(m_samples_per_node, "m_samples_per_node");
    positive(n_final_samples, "n_final_samples");
    positive(max_depth, "max_depth");
    positive(enrich_variants, "enrich_variants");
    positive(verbosity_threshold, "verbosity_threshold");
    positive(l_summaries, "l_summaries");
    positive(group_threshold, "group_threshold");
    positive(group_target, "group_target");
    positive(no_improvement_patience, "no_improvement_patience");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidInput("config.lambda must be >= 0");
    if (generality_schedule.empty()) throw InvalidInput("config.generality_schedule is empty");
    for (std::size_t i = 0; i < generality_schedule.size(); ++i) {
      const double g = generality_schedule[i];
      if (!(g >= 0.0 && g <= 1.0)) throw InvalidInput("config.generality_schedule values must lie in [0,1]");
      if (i > 0 && g > generality_schedule[i - 1])
        throw InvalidInput("config.generality_schedule must be non-increasing");
    }
  }

  /// Generality level used at search iteration `t` (0-based).
  double generality_at(std::size_t t) const {
    return generality_schedule[std::min(t, generality_schedule.size() - 1)];
  }

  /// Level used for final objective evaluation: the most specific scheduled level.
  double evaluation_generality() const { return generality_schedule.back(); }

  Json to_json() const {
    return Json{{"run_seed", run_seed},
                {"m_samples_per_node", m_samples_per_node},
                {"lambda", lambda},
                {"n_final_samples", n_final_samples},
                {"max_depth", max_depth},
                {"enrich_depth_limit", enrich_depth_limit},
                {"enrich_variants", enrich_variants},
                {"verbosity_threshold", verbosity_threshold},
                {"l_summaries", l_summaries},
                {"group_threshold", group_threshold},
                {"group_target", group_target},
                {"generality_schedule", generality_schedule},
                {"no_improvement_patience", no_improvement_patience}};
  }

  /// Missing keys keep their defaults; present keys must have the right type.
  static Config from_json(const Json& j, const std::string& where = "config") {
    if (!j.is_object()) throw ParseError(where + ": expected object");
    Config c;
    auto read_count = [&](const char* key, std::size_t& out) {
      if (!j.contains(key)) return;
      const auto& v = j.at(key);
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        throw ParseError(where + "." + key + ": expected non-negative integer");
      out = v.get<std::size_t>();
    };
    if (j.contains("run_seed")) {
      const auto& v = j.at("run_seed");
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        throw ParseError(where + ".run_seed: expected unsigned integer");
      c.run_seed = v.get<std::uint64_t>();
    }
    read_count("m_samples_per_node", c.m_samples_per_node);
    read_count("n_final_samples", c.n_final_samples);
    read_count("max_depth", c.max_depth);
    read_count("enrich_depth_limit", c.enrich_depth_limit);
    read_count("enrich_variants", c.enrich_variants);
    read_count("verbosity_threshold", c.verbosity_threshold);
    read_count("l_summaries", c.l_summaries);
    read_count("group_threshold", c.group_threshold);
    read_count("group_target", c.group_target);
    read_count("no_improvement_patience", c.no_improvement_patience);
    if (j.contains("lambda")) {
      if (!j.at("lambda").is_number()) throw ParseError(where + ".lambda: expected number");
      c.lambda = j.at("lambda").get<double>();
    }
    if (j.contains("generality_schedule")) {
      const auto& s = j.at("generality_schedule");
      if (!s.is_array()) throw ParseError(where + ".generality_schedule: expected array");
      c.generality_schedule.clear();
      for (const auto& g : s) {
        if (!g.is_number()) throw ParseError(where + ".generality_schedule: expected numbers");
        c.generality_schedule.push_back(g.get<double>());
      }
    }
    try {
      c.validate();
    } catch (const InvalidInput& e) {
      throw ParseError(where + ": " + e.what());
    }
    return c;
  }

  /// 64-bit digest of the canonical serialization.
  std::uint64_t digest() const { return fnv1a64(canonical_dump(to_json())); }
};

}  // namespace domain_bridge
