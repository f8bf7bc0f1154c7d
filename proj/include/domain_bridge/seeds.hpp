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

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string_view>
#include <utility>
#include <vector>

#include "domain_bridge/errors.hpp"
#include "domain_bridge/types.hpp"

namespace domain_bridge {

enum class SeedPurpose : std::uint8_t {
  kRelevance = 1,
  kGenerality = 2,
  kEnrichProbe = 3,
  kSummarizeProbe = 4,
  kEvaluationRelevance = 5,
  kEvaluationGenerality = 6,
  kCloneTrain = 7,
  kCloneHeldOut = 8,
};

inline constexpr std::string_view purpose_name(SeedPurpose p) {
  switch (p) {
    case SeedPurpose::kRelevance: return "relevance";
    case SeedPurpose::kGenerality: return "generality";
    case SeedPurpose::kEnrichProbe: return "enrich_probe";
    case SeedPurpose::kSummarizeProbe: return "summarize_probe";
    case SeedPurpose::kEvaluationRelevance: return "evaluation_relevance";
    case SeedPurpose::kEvaluationGenerality: return "evaluation_generality";
    case SeedPurpose::kCloneTrain: return "clone_train";
    case SeedPurpose::kCloneHeldOut: return "clone_held_out";
  }
  return "unknown";
}

/// Node key used for streams that are not tied to a tree node (final
/// objective evaluation, cloning).
inline constexpr std::uint64_t kDetachedStream = std::numeric_limits<std::uint64_t>::max();

/// Pure seed derivation. Each field is folded through a full-avalanche
/// finalizer, with the purpose tag entering first so streams of different
/// purposes diverge before node and sample indices are mixed in.
inline constexpr std::uint64_t derive_seed(std::uint64_t run_seed, std::uint64_t node_id,
                                           std::uint64_t sample_index, SeedPurpose purpose) {
  std::uint64_t h = mix64(run_seed ^ 0x6a09e667f3bcc909ULL);
  h = mix64(h ^ (static_cast<std::uint64_t>(purpose) * 0xd6e8feb86659fd93ULL));
  h = mix64(h ^ node_id);
  h = mix64(h ^ sample_index);
  return h;
}

/// Indexable stream of sample seeds: either derived from (run seed, node,
/// purpose) or an explicit finite list.
class SeedStream {
 public:
  static SeedStream derived(std::uint64_t run_seed, std::uint64_t node_id, SeedPurpose purpose,
                            std::uint64_t offset = 0) {
    SeedStream s;
    s.run_seed_ = run_seed;
    s.node_id_ = node_id;
    s.purpose_ = purpose;
    s.offset_ = offset;
    return s;
  }

  static SeedStream explicit_list(std::vector<std::uint64_t> seeds) {
    SeedStream s;
    s.list_ = std::move(seeds);
    s.is_list_ = true;
    return s;
  }

  /// A derived stream shifted by `count` samples; lists are sliced.
  SeedStream advanced(std::uint64_t count) const {
    SeedStream s = *this;
    if (is_list_) {
      if (count > list_.size()) throw InvalidInput("seed list exhausted");
      s.list_.erase(s.list_.begin(), s.list_.begin() + static_cast<std::ptrdiff_t>(count));
    } else {
      s.offset_ += count;
    }
    return s;
  }

  std::uint64_t at(std::size_t j) const {
    if (is_list_) {
      if (j >= list_.size()) throw InvalidInput("explicit seed list shorter than sample count");
      return list_[j];
    }
    return derive_seed(run_seed_, node_id_, offset_ + j, purpose_);
  }

  std::vector<std::uint64_t> take(std::size_t n) const {
    std::vector<std::uint64_t> out;
    out.reserve(n);
    for (std::size_t j = 0; j < n; ++j) out.push_back(at(j));
    return out;
  }

 private:
  SeedStream() = default;

  std::uint64_t run_seed_ = 0;
  std::uint64_t node_id_ = 0;
  SeedPurpose purpose_ = SeedPurpose::kRelevance;
  std::uint64_t offset_ = 0;
  std::vector<std::uint64_t> list_;
  bool is_list_ = false;
};

/// Seed sets for the two objective terms.
struct EvaluationSeeds {
  std::vector<std::uint64_t> relevance;
  std::vector<std::uint64_t> generality;

  /// The canonical final-evaluation seeds of a run.
  static EvaluationSeeds for_run(std::uint64_t run_seed, std::size_t n) {
    return {SeedStream::derived(run_seed, kDetachedStream, SeedPurpose::kEvaluationRelevance).take(n),
            SeedStream::derived(run_seed, kDetachedStream, SeedPurpose::kEvaluationGenerality).take(n)};
  }
};

/// splitmix64 generator. Distributions are implemented here rather than via
/// <random> so that synthetic oracles are bit-reproducible across standard
/// libraries.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [0, bound) by rejection; bound > 0.
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) throw InvalidInput("Rng::below requires bound > 0");
    const std::uint64_t limit = max() - max() % bound;
    std::uint64_t r;
    do {
      r = (*this)();
    } while (r >= limit);
    return r % bound;
  }

  /// Uniform double in (0, 1).
  double uniform_open() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (cosine branch only).
  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform_open();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

}  // namespace domain_bridge
