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

#include <array>
#include <atomic>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "domain_bridge/errors.hpp"
#include "domain_bridge/types.hpp"

namespace domain_bridge {

enum class OracleKind : std::size_t {
  kDecode = 0,
  kEmbedText,
  kEmbedImage,
  kCaption,
  kClassify,
  kSummarize,
  kGroup,
  kEnrich,
};

inline constexpr std::size_t kOracleKindCount = 8;

inline constexpr std::string_view oracle_kind_name(OracleKind k) {
  constexpr std::array<std::string_view, kOracleKindCount> names{
      "decode", "embed_text", "embed_image", "caption", "classify", "summarize", "group", "enrich"};
  return names[static_cast<std::size_t>(k)];
}

/// Per-oracle call counters with optional limits. Charging is atomic; a
/// charge that would exceed the limit throws and leaves the counter intact.
class Budget {
 public:
  Budget() {
    for (auto& s : spent_) s.store(0);
    limits_.fill(kUnlimited);
  }
  Budget(const Budget&) = delete;
  Budget& operator=(const Budget&) = delete;

  void set_limit(OracleKind kind, std::uint64_t limit) { limits_[index(kind)] = limit; }

  void charge(OracleKind kind) {
    auto& counter = spent_[index(kind)];
    const std::uint64_t limit = limits_[index(kind)];
    std::uint64_t cur = counter.load();
    do {
      if (cur >= limit) {
        throw BudgetExceeded("budget exhausted for oracle '" + std::string(oracle_kind_name(kind)) + "'");
      }
    } while (!counter.compare_exchange_weak(cur, cur + 1));
  }

  std::uint64_t spent(OracleKind kind) const { return spent_[index(kind)].load(); }

  std::optional<std::uint64_t> remaining(OracleKind kind) const {
    const auto limit = limits_[index(kind)];
    if (limit == kUnlimited) return std::nullopt;
    return limit - spent(kind);
  }

  std::uint64_t total_spent() const {
    std::uint64_t t = 0;
    for (const auto& s : spent_) t += s.load();
    return t;
  }

  std::array<std::uint64_t, kOracleKindCount> snapshot() const {
    std::array<std::uint64_t, kOracleKindCount> out{};
    for (std::size_t i = 0; i < kOracleKindCount; ++i) out[i] = spent_[i].load();
    return out;
  }

 private:
  static constexpr std::uint64_t kUnlimited = std::numeric_limits<std::uint64_t>::max();
  static std::size_t index(OracleKind k) { return static_cast<std::size_t>(k); }

  std::array<std::atomic<std::uint64_t>, kOracleKindCount> spent_;
  std::array<std::uint64_t, kOracleKindCount> limits_;
};

inline std::vector<Description> dedupe_descriptions(std::vector<Description> in) {
  std::vector<Description> out;
  std::set<std::string> seen;
  for (auto& d : in) {
    if (seen.insert(d.text()).second) out.push_back(std::move(d));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Oracle contracts. Public entry points are non-virtual: they validate,
// consult the implementation's cache hook, charge the budget on a miss, and
// normalize outputs to the contract. Implementations override the protected
// hooks only.

class Decoder {
 public:
  virtual ~Decoder() = default;

  Sample decode(const Description& p, std::uint64_t seed, double generality_level, Budget& budget) const {
    if (!(generality_level >= 0.0 && generality_level <= 1.0))
      throw InvalidInput("generality_level must lie in [0,1]");
    if (auto hit = lookup(p, seed, generality_level)) return std::move(*hit);
    budget.charge(OracleKind::kDecode);
    return generate(p, seed, generality_level);
  }

 protected:
  virtual std::optional<Sample> lookup(const Description&, std::uint64_t, double) const { return std::nullopt; }
  virtual Sample generate(const Description& p, std::uint64_t seed, double generality_level) const = 0;
};

class TextEmbedder {
 public:
  virtual ~TextEmbedder() = default;

  Embedding embed(const Description& p, Budget& budget) const {
    if (auto hit = lookup(p)) return std::move(*hit);
    budget.charge(OracleKind::kEmbedText);
    return compute(p);
  }

 protected:
  virtual std::optional<Embedding> lookup(const Description&) const { return std::nullopt; }
  virtual Embedding compute(const Description& p) const = 0;
};

class ImageEncoder {
 public:
  virtual ~ImageEncoder() = default;

  Embedding embed(const Sample& x, Budget& budget) const {
    if (auto hit = lookup_embedding(x)) return std::move(*hit);
    budget.charge(OracleKind::kEmbedImage);
    return compute_embedding(x);
  }

  Description caption(const Sample& x, Budget& budget) const {
    if (auto hit = lookup_caption(x)) return std::move(*hit);
    budget.charge(OracleKind::kCaption);
    return compute_caption(x);
  }

 protected:
  virtual std::optional<Embedding> lookup_embedding(const Sample&) const { return std::nullopt; }
  virtual std::optional<Description> lookup_caption(const Sample&) const { return std::nullopt; }
  virtual Embedding compute_embedding(const Sample& x) const = 0;
  virtual Description compute_caption(const Sample& x) const = 0;
};

/// Hard-label access only: there is deliberately no way to obtain scores.
class TargetModel {
 public:
  virtual ~TargetModel() = default;

  ClassLabel classify(const Sample& x, Budget& budget) const {
    if (auto hit = lookup(x)) return *hit;
    budget.charge(OracleKind::kClassify);
    return compute(x);
  }

  /// Number of classes if the model advertises it.
  virtual std::optional<std::size_t> num_classes() const { return std::nullopt; }

 protected:
  virtual std::optional<ClassLabel> lookup(const Sample&) const { return std::nullopt; }
  virtual ClassLabel compute(const Sample& x) const = 0;
};

class Summarizer {
 public:
  virtual ~Summarizer() = default;

  std::vector<Description> summarize(const Description& p, std::size_t l, std::size_t max_words,
                                     Budget& budget) const {
    if (l == 0 || max_words == 0) throw InvalidInput("summarize requires l >= 1 and max_words >= 1");
    auto raw = lookup(p, l, max_words);
    if (!raw) {
      budget.charge(OracleKind::kSummarize);
      raw = compute(p, l, max_words);
    }
    std::vector<Description> out;
    for (auto& d : dedupe_descriptions(std::move(*raw))) {
      if (d.word_count() <= max_words && out.size() < l) out.push_back(std::move(d));
    }
    return out;
  }

 protected:
  virtual std::optional<std::vector<Description>> lookup(const Description&, std::size_t, std::size_t) const {
    return std::nullopt;
  }
  virtual std::vector<Description> compute(const Description& p, std::size_t l, std::size_t max_words) const = 0;
};

class Grouper {
 public:
  virtual ~Grouper() = default;

  std::vector<Description> group(const std::vector<Description>& inputs, std::size_t target_count,
                                 Budget& budget) const {
    if (inputs.empty()) throw InvalidInput("group requires at least one description");
    if (target_count == 0) throw InvalidInput("group requires target_count >= 1");
    if (inputs.size() == 1) return inputs;
    auto raw = lookup(inputs, target_count);
    if (!raw) {
      budget.charge(OracleKind::kGroup);
      raw = compute(inputs, target_count);
    }
    auto out = dedupe_descriptions(std::move(*raw));
    const std::size_t limit = std::min(target_count, inputs.size());
    if (out.size() > limit) out.erase(out.begin() + static_cast<std::ptrdiff_t>(limit), out.end());
    return out;
  }

 protected:
  virtual std::optional<std::vector<Description>> lookup(const std::vector<Description>&, std::size_t) const {
    return std::nullopt;
  }
  virtual std::vector<Description> compute(const std::vector<Description>& inputs, std::size_t target_count) const = 0;
};

class Enricher {
 public:
  virtual ~Enricher() = default;

  std::vector<Description> enrich(const Description& p, std::size_t n_variants, Budget& budget) const {
    if (n_variants == 0) return {};
    auto raw = lookup(p, n_variants);
    if (!raw) {
      budget.charge(OracleKind::kEnrich);
      raw = compute(p, n_variants);
    }
    std::vector<Description> out;
    for (auto& d : dedupe_descriptions(std::move(*raw))) {
      if (d != p && out.size() < n_variants) out.push_back(std::move(d));
    }
    return out;
  }

 protected:
  virtual std::optional<std::vector<Description>> lookup(const Description&, std::size_t) const {
    return std::nullopt;
  }
  virtual std::vector<Description> compute(const Description& p, std::size_t n_variants) const = 0;
};

// ---------------------------------------------------------------------------

/// The investigator's full set of capabilities plus a shared call budget.
struct OracleSuite {
  std::shared_ptr<const Decoder> decoder;
  std::shared_ptr<const TextEmbedder> text_embedder;
  std::shared_ptr<const ImageEncoder> image_encoder;
  std::shared_ptr<const TargetModel> target;
  std::shared_ptr<const Summarizer> summarizer;
  std::shared_ptr<const Grouper> grouper;
  std::shared_ptr<const Enricher> enricher;
  std::shared_ptr<Budget> budget = std::make_shared<Budget>();

  Sample decode(const Description& p, std::uint64_t seed, double g) const {
    return decoder->decode(p, seed, g, *budget);
  }
  Embedding embed_text(const Description& p) const { return text_embedder->embed(p, *budget); }
  Embedding embed_image(const Sample& x) const { return image_encoder->embed(x, *budget); }
  Description caption(const Sample& x) const { return image_encoder->caption(x, *budget); }
  ClassLabel classify(const Sample& x) const { return target->classify(x, *budget); }
  std::vector<Description> summarize(const Description& p, std::size_t l, std::size_t max_words) const {
    return summarizer->summarize(p, l, max_words, *budget);
  }
  std::vector<Description> group(const std::vector<Description>& in, std::size_t target_count) const {
    return grouper->group(in, target_count, *budget);
  }
  std::vector<Description> enrich(const Description& p, std::size_t n) const {
    return enricher->enrich(p, n, *budget);
  }

  /// Same oracles, fresh budget counters.
  OracleSuite with_fresh_budget() const {
    OracleSuite s = *this;
    s.budget = std::make_shared<Budget>();
    return s;
  }
};

}  // namespace domain_bridge
