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
#include <bit>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "domain_bridge/canonical_json.hpp"
#include "domain_bridge/errors.hpp"
#include "domain_bridge/oracles.hpp"
#include "domain_bridge/seeds.hpp"
#include "domain_bridge/types.hpp"

namespace domain_bridge::synthetic {

using TokenSet = std::vector<std::size_t>;  // sorted, unique token indices

struct ClassSpec {
  ClassLabel label;
  /// Ground-truth minimal description of the class.
  TokenSet required_tokens;
};

struct UniverseSpec {
  std::uint64_t universe_seed = 0;
  std::size_t vocab_size = 24;
  std::size_t dim = 32;
  std::size_t max_tokens = 4;
  std::vector<ClassSpec> classes;
  double sigma_min = 0.05;
  double sigma_max = 0.6;
  double accept_threshold = 0.8;
  double caption_gain = 0.01;
  /// When false the decoder does not pad descriptions to max_tokens.
  bool complete_to_length = true;

  void validate() const {
    if (vocab_size < 1 || max_tokens < 1 || max_tokens > vocab_size)
      throw InvalidInput("universe requires vocab_size >= max_tokens >= 1");
    if (dim < 1) throw InvalidInput("universe requires dim >= 1");
    if (!(sigma_min >= 0.0 && sigma_min <= sigma_max)) throw InvalidInput("universe requires 0 <= sigma_min <= sigma_max");
    if (!(accept_threshold >= -1.0 && accept_threshold < 1.0))
      throw InvalidInput("universe accept_threshold must lie in [-1, 1)");
    if (classes.empty()) throw InvalidInput("universe requires at least one class");
    for (std::size_t i = 0; i < classes.size(); ++i) {
      const auto& c = classes[i];
      if (c.label.index != i) throw InvalidInput("class labels must be 0..n-1 in order");
      if (c.required_tokens.empty()) throw InvalidInput("class required_tokens must be non-empty");
      if (c.required_tokens.size() > max_tokens) throw InvalidInput("class required_tokens exceed max_tokens");
      if (!std::is_sorted(c.required_tokens.begin(), c.required_tokens.end()) ||
          std::adjacent_find(c.required_tokens.begin(), c.required_tokens.end()) != c.required_tokens.end())
        throw InvalidInput("class required_tokens must be sorted and unique");
      if (c.required_tokens.back() >= vocab_size) throw InvalidInput("class token outside vocabulary");
    }
  }

  /// Label emitted when no class centroid clears the acceptance threshold.
  ClassLabel background_label() const { return ClassLabel{classes.size()}; }
};

inline std::size_t token_name_width(std::size_t vocab_size) {
  std::size_t width = 1;
  for (std::size_t v = vocab_size > 0 ? vocab_size - 1 : 0; v >= 10; v /= 10) ++width;
  return std::max<std::size_t>(2, width);
}

inline std::string token_name(std::size_t index, std::size_t vocab_size) {
  std::string digits = std::to_string(index);
  const std::size_t width = token_name_width(vocab_size);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return "t" + digits;
}

inline std::optional<std::size_t> parse_token_name(std::string_view word, std::size_t vocab_size) {
  const std::size_t width = token_name_width(vocab_size);
  if (word.size() != width + 1 || word[0] != 't') return std::nullopt;
  std::size_t v = 0;
  for (char c : word.substr(1)) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + static_cast<std::size_t>(c - '0');
  }
  if (v >= vocab_size) return std::nullopt;
  return v;
}

// ---------------------------------------------------------------------------

/// The materialized world: token vectors, class centroids and every oracle
/// behavior as a pure function of (spec, arguments).
class Universe {
 public:
  static std::shared_ptr<const Universe> make(UniverseSpec spec) {
    return std::shared_ptr<const Universe>(new Universe(std::move(spec)));
  }

  const UniverseSpec& spec() const { return spec_; }
  std::size_t dim() const { return spec_.dim; }
  std::size_t vocab_size() const { return spec_.vocab_size; }
  const std::vector<double>& token_vector(std::size_t t) const { return tokens_.at(t); }
  const Embedding& centroid(std::size_t cls) const { return centroids_.at(cls); }

  struct Parsed {
    TokenSet tokens;
    std::vector<std::string> unknown;  // sorted, unique out-of-vocabulary words
    std::size_t size() const { return tokens.size() + unknown.size(); }
  };

  Parsed parse(const Description& p) const {
    std::set<std::size_t> toks;
    std::set<std::string> unknown;
    for (const auto& w : p.words()) {
      if (auto t = parse_token_name(w, spec_.vocab_size)) toks.insert(*t);
      else unknown.insert(w);
    }
    return {TokenSet(toks.begin(), toks.end()), std::vector<std::string>(unknown.begin(), unknown.end())};
  }

  Description render(const TokenSet& tokens) const {
    std::string text;
    for (std::size_t t : tokens) {
      if (!text.empty()) text += ' ';
      text += token_name(t, spec_.vocab_size);
    }
    return Description(text);
  }

  /// Out-of-vocabulary words get a fixed pseudo-random direction.
  std::vector<double> unknown_word_vector(std::string_view word) const {
    return random_unit(mix64(spec_.universe_seed ^ fnv1a64(word) ^ kUnknownTag));
  }

  /// normalize(sum of word vectors), tokens in index order then unknown words.
  Embedding embed_text(const Description& p) const {
    const Parsed parsed = parse(p);
    return Embedding(sum_vectors(parsed.tokens, parsed.unknown));
  }

  /// Completes p to max_tokens with seeded-uniform unused tokens, embeds the
  /// completed set, adds isotropic Gaussian noise whose expected norm is
  /// sigma(g), and renormalizes.
  std::vector<double> decode_vector(const Description& p, std::uint64_t seed, double g) const {
    const Parsed parsed = parse(p);
    Rng rng(mix64(mix64(spec_.universe_seed ^ kDecodeTag) ^ seed));
    TokenSet chosen = parsed.tokens;
    if (spec_.complete_to_length) {
      std::size_t count = parsed.size();
      while (count < spec_.max_tokens && chosen.size() < spec_.vocab_size) {
        TokenSet unused;
        for (std::size_t t = 0; t < spec_.vocab_size; ++t)
          if (!std::binary_search(chosen.begin(), chosen.end(), t)) unused.push_back(t);
        const std::size_t pick = unused[rng.below(unused.size())];
        chosen.insert(std::upper_bound(chosen.begin(), chosen.end(), pick), pick);
        ++count;
      }
    }
    std::vector<double> v = unit_copy(sum_vectors(chosen, parsed.unknown));
    const double sigma = sigma_at(g);
    const double scale = sigma / std::sqrt(static_cast<double>(spec_.dim));
    for (double& x : v) x += scale * rng.normal();
    return unit_copy(std::move(v));
  }

  double sigma_at(double g) const { return spec_.sigma_min + g * (spec_.sigma_max - spec_.sigma_min); }

  /// Greedy reconstruction: repeatedly add the token that most increases
  /// cosine to `v`; stop when the gain drops below caption_gain or
  /// max_tokens are selected. At least one token is always chosen.
  Description caption(const Embedding& v) const {
    TokenSet chosen;
    std::vector<double> sum(spec_.dim, 0.0);
    double current = 0.0;
    while (chosen.size() < spec_.max_tokens) {
      std::optional<std::size_t> best;
      double best_cos = -2.0;
      for (std::size_t t = 0; t < spec_.vocab_size; ++t) {
        if (std::binary_search(chosen.begin(), chosen.end(), t)) continue;
        std::vector<double> cand = sum;
        for (std::size_t d = 0; d < spec_.dim; ++d) cand[d] += tokens_[t][d];
        const double c = unit_cosine(cand, v);
        if (c > best_cos) {
          best_cos = c;
          best = t;
        }
      }
      if (!best) break;
      if (!chosen.empty() && best_cos - current < spec_.caption_gain) break;
      chosen.insert(std::upper_bound(chosen.begin(), chosen.end(), *best), *best);
      for (std::size_t d = 0; d < spec_.dim; ++d) sum[d] += tokens_[*best][d];
      current = best_cos;
    }
    return render(chosen);
  }

  /// argmax_i cos(v, centroid_i) if it reaches the threshold, else background.
  ClassLabel classify(const Embedding& v) const {
    std::size_t best = 0;
    double best_cos = -2.0;
    for (std::size_t i = 0; i < centroids_.size(); ++i) {
      const double c = v.cosine(centroids_[i]);
      if (c > best_cos) {
        best_cos = c;
        best = i;
      }
    }
    return best_cos >= spec_.accept_threshold ? ClassLabel{best} : spec_.background_label();
  }

  std::vector<std::uint8_t> encode_payload(std::span<const double> v) const {
    std::vector<std::uint8_t> out;
    out.reserve(v.size() * 8);
    for (double x : v) {
      const auto bits = std::bit_cast<std::uint64_t>(x);
      for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
    }
    return out;
  }

  Embedding decode_payload(std::span<const std::uint8_t> payload) const {
    if (payload.size() != spec_.dim * 8)
      throw MalformedSample("synthetic payload has " + std::to_string(payload.size()) + " bytes, expected " +
                            std::to_string(spec_.dim * 8));
    std::vector<double> v(spec_.dim);
    for (std::size_t i = 0; i < spec_.dim; ++i) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(payload[i * 8 + b]) << (8 * b);
      v[i] = std::bit_cast<double>(bits);
      if (!std::isfinite(v[i])) throw MalformedSample("synthetic payload contains a non-finite value");
    }
    try {
      return Embedding(std::move(v));
    } catch (const InvalidInput&) {
      throw MalformedSample("synthetic payload is the zero vector");
    }
  }

  // -- LLM stand-ins over word sets ----------------------------------------

  static std::vector<std::string> word_set(const Description& p) {
    auto w = p.words();
    std::sort(w.begin(), w.end());
    w.erase(std::unique(w.begin(), w.end()), w.end());
    return w;
  }

  static Description render_words(const std::vector<std::string>& words) {
    std::string text;
    for (const auto& w : words) {
      if (!text.empty()) text += ' ';
      text += w;
    }
    return Description(text);
  }

  /// All (|p|-1)-word subsets (capped at max_words), lexicographic, first l.
  std::vector<Description> summarize(const Description& p, std::size_t l, std::size_t max_words) const {
    const auto words = word_set(p);
    if (words.size() <= 1) return {p};
    const std::size_t k = std::max<std::size_t>(1, std::min(words.size() - 1, max_words));
    std::vector<Description> out;
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    while (out.size() < l) {
      std::vector<std::string> subset;
      for (std::size_t i : idx) subset.push_back(words[i]);
      out.push_back(render_words(subset));
      // next combination in lexicographic order
      std::size_t i = k;
      while (i > 0 && idx[i - 1] == words.size() - k + (i - 1)) --i;
      if (i == 0) break;
      ++idx[i - 1];
      for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
    return out;
  }

  /// Intersection of all inputs when non-empty; otherwise farthest-point
  /// clustering into at most target_count groups, each represented by its
  /// intersection or, failing that, its medoid.
  std::vector<Description> group(const std::vector<Description>& inputs, std::size_t target_count) const {
    if (auto common = intersection(inputs, all_indices(inputs.size()))) return {*common};
    std::vector<Embedding> emb;
    for (const auto& d : inputs) emb.push_back(embed_text(d));
    const auto everyone = all_indices(inputs.size());
    std::vector<std::size_t> centers{medoid(emb, everyone)};
    while (centers.size() < target_count) {
      std::optional<std::size_t> pick;
      double pick_closeness = 2.0;
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (std::find(centers.begin(), centers.end(), i) != centers.end()) continue;
        double closeness = -2.0;
        for (std::size_t c : centers) closeness = std::max(closeness, emb[i].cosine(emb[c]));
        if (closeness < pick_closeness) {
          pick_closeness = closeness;
          pick = i;
        }
      }
      if (!pick || pick_closeness >= 1.0 - 1e-12) break;
      centers.push_back(*pick);
    }
    std::vector<std::vector<std::size_t>> clusters(centers.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      std::size_t best = 0;
      double best_cos = -2.0;
      for (std::size_t c = 0; c < centers.size(); ++c) {
        const double v = emb[i].cosine(emb[centers[c]]);
        if (v > best_cos) {
          best_cos = v;
          best = c;
        }
      }
      clusters[best].push_back(i);
    }
    std::sort(clusters.begin(), clusters.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    std::vector<Description> out;
    for (const auto& members : clusters) {
      if (auto common = intersection(inputs, members)) out.push_back(*common);
      else out.push_back(inputs[medoid(emb, members)]);
    }
    return out;
  }

  /// Supersets of p, each adding one seeded-uniform unused vocabulary token.
  std::vector<Description> enrich(const Description& p, std::size_t n_variants) const {
    const auto words = word_set(p);
    TokenSet unused;
    for (std::size_t t = 0; t < spec_.vocab_size; ++t) {
      if (!std::binary_search(words.begin(), words.end(), token_name(t, spec_.vocab_size))) unused.push_back(t);
    }
    Rng rng(mix64(spec_.universe_seed ^ fnv1a64(p.text()) ^ kEnrichTag));
    for (std::size_t i = unused.size(); i > 1; --i) std::swap(unused[i - 1], unused[rng.below(i)]);
    std::vector<Description> out;
    for (std::size_t i = 0; i < std::min(n_variants, unused.size()); ++i) {
      auto w = words;
      w.push_back(token_name(unused[i], spec_.vocab_size));
      std::sort(w.begin(), w.end());
      out.push_back(render_words(w));
    }
    return out;
  }

 private:
  static constexpr std::uint64_t kTokenTag = 0x746f6b656e000001ULL;
  static constexpr std::uint64_t kUnknownTag = 0x756e6b6e6f776e02ULL;
  static constexpr std::uint64_t kDecodeTag = 0x6465636f64650003ULL;
  static constexpr std::uint64_t kEnrichTag = 0x656e726963680004ULL;

  static std::vector<double> unit_copy(std::vector<double> v) {
    const Embedding e(std::move(v));
    return {e.values().begin(), e.values().end()};
  }

  explicit Universe(UniverseSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    for (std::size_t t = 0; t < spec_.vocab_size; ++t)
      tokens_.push_back(random_unit(mix64(mix64(spec_.universe_seed ^ kTokenTag) ^ t)));
    for (const auto& c : spec_.classes) centroids_.push_back(Embedding(sum_vectors(c.required_tokens, {})));
    for (std::size_t i = 0; i < centroids_.size(); ++i) {
      for (std::size_t j = i + 1; j < centroids_.size(); ++j) {
        if (centroids_[i].cosine(centroids_[j]) >= spec_.accept_threshold)
          throw UniverseConstructionFailed("centroids of classes " + std::to_string(i) + " and " +
                                           std::to_string(j) + " are not separated by the acceptance threshold");
      }
    }
  }

  std::vector<double> random_unit(std::uint64_t seed) const {
    Rng rng(seed);
    std::vector<double> v(spec_.dim);
    for (double& x : v) x = rng.normal();
    return unit_copy(std::move(v));
  }

  std::vector<double> sum_vectors(const TokenSet& toks, const std::vector<std::string>& unknown) const {
    std::vector<double> sum(spec_.dim, 0.0);
    for (std::size_t t : toks)
      for (std::size_t d = 0; d < spec_.dim; ++d) sum[d] += tokens_[t][d];
    for (const auto& w : unknown) {
      const auto u = unknown_word_vector(w);
      for (std::size_t d = 0; d < spec_.dim; ++d) sum[d] += u[d];
    }
    return sum;
  }

  static double unit_cosine(const std::vector<double>& a, const Embedding& unit) {
    double dot = 0.0, sq = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
      dot += a[d] * unit.values()[d];
      sq += a[d] * a[d];
    }
    return sq > 0.0 ? dot / std::sqrt(sq) : 0.0;
  }

  static std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = i;
    return out;
  }

  static std::optional<Description> intersection(const std::vector<Description>& inputs,
                                                 const std::vector<std::size_t>& members) {
    auto common = word_set(inputs[members.front()]);
    for (std::size_t i : members) {
      const auto w = word_set(inputs[i]);
      std::vector<std::string> next;
      std::set_intersection(common.begin(), common.end(), w.begin(), w.end(), std::back_inserter(next));
      common = std::move(next);
    }
    if (common.empty()) return std::nullopt;
    return render_words(common);
  }

  static std::size_t medoid(const std::vector<Embedding>& emb, const std::vector<std::size_t>& members) {
    std::size_t best = members.front();
    double best_sum = -1e300;
    for (std::size_t i : members) {
      double s = 0.0;
      for (std::size_t j : members) s += emb[i].cosine(emb[j]);
      if (s > best_sum) {
        best_sum = s;
        best = i;
      }
    }
    return best;
  }

  UniverseSpec spec_;
  std::vector<std::vector<double>> tokens_;
  std::vector<Embedding> centroids_;
};

// ---------------------------------------------------------------------------
// Oracle adapters

class SyntheticDecoder final : public Decoder {
 public:
  explicit SyntheticDecoder(std::shared_ptr<const Universe> u) : u_(std::move(u)) {}

 protected:
  Sample generate(const Description& p, std::uint64_t seed, double g) const override {
    return Sample(u_->encode_payload(u_->decode_vector(p, seed, g)), seed, p);
  }

 private:
  std::shared_ptr<const Universe> u_;
};

class SyntheticTextEmbedder final : public TextEmbedder {
 public:
  explicit SyntheticTextEmbedder(std::shared_ptr<const Universe> u) : u_(std::move(u)) {}

 protected:
  Embedding compute(const Description& p) const override { return u_->embed_text(p); }

 private:
  std::shared_ptr<const Universe> u_;
};

class SyntheticImageEncoder final : public ImageEncoder {
 public:
  explicit SyntheticImageEncoder(std::shared_ptr<const Universe> u) : u_(std::move(u)) {}

 protected:
  Embedding compute_embedding(const Sample& x) const override { return u_->decode_payload(x.payload); }
  Description compute_caption(const Sample& x) const override { return u_->caption(u_->decode_payload(x.payload)); }

 private:
  std::shared_ptr<const Universe> u_;
};

class SyntheticTarget final : public TargetModel {
 public:
  explicit SyntheticTarget(std::shared_ptr<const Universe> u) : u_(std::move(u)) {}
  // The background label is one of the target's outputs.
  std::optional<std::size_t> num_classes() const override { return u_->spec().classes.size() + 1; }

 protected:
  ClassLabel compute(const Sample& x) const override { return u_->classify(u_->decode_payload(x.payload)); }

 private:
  std::shared_ptr<const Universe> u_;
};

class SyntheticSummarizer final : public Summarizer {
 public:
  explicit SyntheticSummarizer(std::shared_ptr<const Universe> u) : u_(std::move(u)) {}

 protected:
  std::vector<Description> compute(const Description& p, std::size_t l, std::size_t max_words) const override {
    return u_->summarize(p, l, max_words);
  }

 private:
  std::shared_ptr<const Universe> u_;
};

class SyntheticGrouper final : public Grouper {
 public:
  explicit SyntheticGrouper(std::shared_ptr<const Universe> u) : u_(std::move(u)) {}

 protected:
  std::vector<Description> compute(const std::vector<Description>& inputs, std::size_t target) const override {
    return u_->group(inputs, target);
  }

 private:
  std::shared_ptr<const Universe> u_;
};

class SyntheticEnricher final : public Enricher {
 public:
  explicit SyntheticEnricher(std::shared_ptr<const Universe> u) : u_(std::move(u)) {}

 protected:
  std::vector<Description> compute(const Description& p, std::size_t n) const override { return u_->enrich(p, n); }

 private:
  std::shared_ptr<const Universe> u_;
};

inline OracleSuite make_suite(const std::shared_ptr<const Universe>& u) {
  OracleSuite s;
  s.decoder = std::make_shared<SyntheticDecoder>(u);
  s.text_embedder = std::make_shared<SyntheticTextEmbedder>(u);
  s.image_encoder = std::make_shared<SyntheticImageEncoder>(u);
  s.target = std::make_shared<SyntheticTarget>(u);
  s.summarizer = std::make_shared<SyntheticSummarizer>(u);
  s.grouper = std::make_shared<SyntheticGrouper>(u);
  s.enricher = std::make_shared<SyntheticEnricher>(u);
  return s;
}

/// All seven oracle contracts backed by one deterministic universe.
inline OracleSuite build_universe(const UniverseSpec& spec) { return make_suite(Universe::make(spec)); }

// ---------------------------------------------------------------------------
// Random universes

/// Samples `n_classes` distinct token sets of `class_size` tokens, re-sampling
/// until every pair of centroids is separated (cosine below the threshold).
inline UniverseSpec make_random_spec(std::uint64_t universe_seed, std::size_t vocab_size, std::size_t dim,
                                     std::size_t max_tokens, std::size_t n_classes, std::size_t class_size,
                                     double accept_threshold, bool disjoint_classes = false,
                                     std::size_t max_attempts = 1000) {
  UniverseSpec spec;
  spec.universe_seed = universe_seed;
  spec.vocab_size = vocab_size;
  spec.dim = dim;
  spec.max_tokens = max_tokens;
  spec.accept_threshold = accept_threshold;
  if (class_size == 0 || class_size > max_tokens || n_classes == 0)
    throw InvalidInput("random universe requires 1 <= class_size <= max_tokens and n_classes >= 1");
  if (disjoint_classes && n_classes * class_size > vocab_size)
    throw InvalidInput("disjoint classes need n_classes * class_size <= vocab_size");
  Rng rng(mix64(universe_seed ^ 0x636c617373657305ULL));
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    spec.classes.clear();
    std::set<TokenSet> used;
    bool distinct = true;
    TokenSet pool(vocab_size);
    for (std::size_t t = 0; t < vocab_size; ++t) pool[t] = t;
    std::size_t offset = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
      if (!disjoint_classes) offset = 0;
      const std::size_t left = vocab_size - offset;
      for (std::size_t i = 0; i < class_size; ++i)
        std::swap(pool[offset + i], pool[offset + i + rng.below(left - i)]);
      TokenSet chosen(pool.begin() + static_cast<std::ptrdiff_t>(offset),
                      pool.begin() + static_cast<std::ptrdiff_t>(offset + class_size));
      offset += class_size;
      std::sort(chosen.begin(), chosen.end());
      distinct = distinct && used.insert(chosen).second;
      spec.classes.push_back({ClassLabel{c}, chosen});
    }
    if (!distinct) continue;
    try {
      Universe::make(spec);
      return spec;
    } catch (const UniverseConstructionFailed&) {
    }
  }
  throw UniverseConstructionFailed("could not separate class centroids after " + std::to_string(max_attempts) +
                                   " attempts");
}

// ---------------------------------------------------------------------------
// UniverseSpec file format

inline Json universe_to_json(const UniverseSpec& spec) {
  const auto u = Universe::make(spec);
  Json classes = Json::array();
  for (const auto& c : spec.classes) {
    Json toks = Json::array();
    for (std::size_t t : c.required_tokens) toks.push_back(token_name(t, spec.vocab_size));
    std::vector<double> centroid(u->centroid(c.label.index).values().begin(), u->centroid(c.label.index).values().end());
    classes.push_back({{"label", c.label.index}, {"required_tokens", toks}, {"centroid", centroid}});
  }
  return {{"universe_seed", spec.universe_seed},
          {"vocab_size", spec.vocab_size},
          {"dim", spec.dim},
          {"max_tokens", spec.max_tokens},
          {"classes", classes},
          {"sigma_min", spec.sigma_min},
          {"sigma_max", spec.sigma_max},
          {"accept_threshold", spec.accept_threshold},
          {"caption_gain", spec.caption_gain},
          {"complete_to_length", spec.complete_to_length}};
}

/// Parses a UniverseSpec. `centroid`, when present, is derived data and ignored.
inline UniverseSpec universe_from_json(const Json& j) {
  auto bad = [](const std::string& f, const std::string& w) { throw ParseError("universe." + f + ": " + w); };
  if (!j.is_object()) throw ParseError("universe: expected object");
  UniverseSpec s;
  auto uint_field = [&](const char* key, auto& out, bool required) {
    if (!j.contains(key)) {
      if (required) bad(key, "missing");
      return;
    }
    const auto& v = j.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.template get<std::int64_t>() >= 0))
      bad(key, "expected non-negative integer");
    out = v.template get<std::remove_reference_t<decltype(out)>>();
  };
  auto real_field = [&](const char* key, double& out) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_number()) bad(key, "expected number");
    out = j.at(key).get<double>();
  };
  uint_field("universe_seed", s.universe_seed, true);
  uint_field("vocab_size", s.vocab_size, false);
  uint_field("dim", s.dim, false);
  uint_field("max_tokens", s.max_tokens, false);
  real_field("sigma_min", s.sigma_min);
  real_field("sigma_max", s.sigma_max);
  real_field("accept_threshold", s.accept_threshold);
  real_field("caption_gain", s.caption_gain);
  if (j.contains("complete_to_length")) {
    if (!j.at("complete_to_length").is_boolean()) bad("complete_to_length", "expected boolean");
    s.complete_to_length = j.at("complete_to_length").get<bool>();
  }
  if (!j.contains("classes") || !j.at("classes").is_array()) bad("classes", "expected array");
  const auto& classes = j.at("classes");
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const std::string w = "classes[" + std::to_string(i) + "]";
    const auto& c = classes[i];
    if (!c.is_object()) bad(w, "expected object");
    ClassSpec cs;
    if (!c.contains("label") || !c.at("label").is_number_unsigned()) bad(w + ".label", "expected non-negative integer");
    cs.label.index = c.at("label").get<std::size_t>();
    if (!c.contains("required_tokens") || !c.at("required_tokens").is_array())
      bad(w + ".required_tokens", "expected array");
    for (const auto& t : c.at("required_tokens")) {
      if (!t.is_string()) bad(w + ".required_tokens", "expected token names");
      auto idx = parse_token_name(t.get<std::string>(), s.vocab_size);
      if (!idx) bad(w + ".required_tokens", "unknown token '" + t.get<std::string>() + "'");
      cs.required_tokens.push_back(*idx);
    }
    if (!std::is_sorted(cs.required_tokens.begin(), cs.required_tokens.end()))
      bad(w + ".required_tokens", "must be sorted");
    s.classes.push_back(std::move(cs));
  }
  try {
    s.validate();
  } catch (const InvalidInput& e) {
    throw ParseError(std::string("universe: ") + e.what());
  }
  return s;
}

}  // namespace domain_bridge::synthetic
