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

#include <cstdint>
#include <vector>

#include "domain_bridge/errors.hpp"
#include "domain_bridge/seeds.hpp"
#include "domain_bridge/synthetic/universe.hpp"
#include "domain_bridge/types.hpp"

namespace domain_bridge::synthetic {

/// Number of non-empty token sets of size at most max_tokens.
inline double candidate_count(const UniverseSpec& spec) {
  double total = 0.0, binom = 1.0;
  for (std::size_t j = 1; j <= spec.max_tokens; ++j) {
    binom = binom * static_cast<double>(spec.vocab_size - j + 1) / static_cast<double>(j);
    total += binom;
  }
  return total;
}

inline constexpr double kMaxBruteForceCandidates = 1e6;

struct BruteForceResult {
  Description best;
  ObjectiveValue value;
  std::size_t candidates_evaluated = 0;
};

/// Exact V(p) over the given seed sets, computed straight from the universe.
inline ObjectiveValue exact_objective(const Universe& u, const Description& p, ClassLabel target_class,
                                      double lambda, double generality_level, const EvaluationSeeds& seeds) {
  std::size_t k = 0;
  for (std::uint64_t s : seeds.relevance) {
    if (u.classify(Embedding(u.decode_vector(p, s, generality_level))) == target_class) ++k;
  }
  const Embedding text = u.embed_text(p);
  double sum = 0.0;
  for (std::uint64_t s : seeds.generality) sum += Embedding(u.decode_vector(p, s, generality_level)).cosine(text);
  return ObjectiveValue::make(static_cast<double>(k) / static_cast<double>(seeds.relevance.size()),
                              sum / static_cast<double>(seeds.generality.size()), lambda);
}

/// Exhaustive argmax of V over every token set of size 1..max_tokens. Ties
/// go to fewer tokens, then the lexicographically smaller rendering, which
/// is the enumeration order.
inline BruteForceResult brute_force_optimum(const UniverseSpec& spec, ClassLabel target_class, double lambda,
                                            double generality_level, const EvaluationSeeds& seeds) {
  if (candidate_count(spec) > kMaxBruteForceCandidates)
    throw InvalidInput("brute force refused: more than 1e6 candidate descriptions");
  if (seeds.relevance.empty() || seeds.generality.empty()) throw InvalidInput("brute force requires seeds");
  const auto u = Universe::make(spec);
  std::optional<BruteForceResult> best;
  std::size_t evaluated = 0;
  for (std::size_t size = 1; size <= spec.max_tokens; ++size) {
    TokenSet idx(size);
    for (std::size_t i = 0; i < size; ++i) idx[i] = i;
    while (true) {
      const Description p = u->render(idx);
      const ObjectiveValue v = exact_objective(*u, p, target_class, lambda, generality_level, seeds);
      ++evaluated;
      if (!best || v.value > best->value.value) best = BruteForceResult{p, v, 0};
      std::size_t i = size;
      while (i > 0 && idx[i - 1] == spec.vocab_size - size + (i - 1)) --i;
      if (i == 0) break;
      ++idx[i - 1];
      for (std::size_t j = i; j < size; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  best->candidates_evaluated = evaluated;
  return *best;
}

/// Convenience form: the run's canonical evaluation seeds and level.
inline BruteForceResult brute_force_optimum(const UniverseSpec& spec, ClassLabel target_class, const Config& cfg) {
  return brute_force_optimum(spec, target_class, cfg.lambda, cfg.evaluation_generality(),
                             EvaluationSeeds::for_run(cfg.run_seed, cfg.n_final_samples));
}

/// One explicit seed set shared by both terms.
inline BruteForceResult brute_force_optimum(const UniverseSpec& spec, ClassLabel target_class, const Config& cfg,
                                            const std::vector<std::uint64_t>& seed_set) {
  return brute_force_optimum(spec, target_class, cfg.lambda, cfg.evaluation_generality(),
                             EvaluationSeeds{seed_set, seed_set});
}

}  // namespace domain_bridge::synthetic
