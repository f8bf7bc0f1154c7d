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

#include <cstddef>
#include <vector>

#include "domain_bridge/errors.hpp"
#include "domain_bridge/oracles.hpp"
#include "domain_bridge/seeds.hpp"
#include "domain_bridge/types.hpp"

namespace domain_bridge {

/// Monte Carlo estimate of Pr_s[argmax M(Dec(e; s)) = i].
struct RelevanceEstimate {
  std::size_t k = 0;
  std::size_t m = 0;
  std::vector<ClassLabel> per_sample_labels;
  /// The k correctly classified samples, in sample-index order.
  std::vector<Sample> correct_samples;

  Relevance relevance() const { return Relevance(k, m); }
  double value() const { return relevance().value(); }
};

/// Monte Carlo estimate of E_s[cos(Enc(Dec(e; s)), e)].
struct GeneralityEstimate {
  double mean_cosine = 0.0;
  std::size_t n = 0;
};

inline RelevanceEstimate estimate_relevance(const Description& description, ClassLabel target_class,
                                            std::size_t m, double generality_level, const OracleSuite& suite,
                                            const SeedStream& seeds) {
  if (m == 0) throw InvalidInput("estimate_relevance requires m >= 1");
  RelevanceEstimate est;
  est.m = m;
  est.per_sample_labels.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    Sample x = suite.decode(description, seeds.at(j), generality_level);
    const ClassLabel label = suite.classify(x);
    est.per_sample_labels.push_back(label);
    if (label == target_class) {
      ++est.k;
      est.correct_samples.push_back(std::move(x));
    }
  }
  return est;
}

inline GeneralityEstimate estimate_generality_penalty(const Description& description, std::size_t n,
                                                      double generality_level, const OracleSuite& suite,
                                                      const SeedStream& seeds) {
  if (n == 0) throw InvalidInput("estimate_generality_penalty requires n >= 1");
  const Embedding text = suite.embed_text(description);
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const Sample x = suite.decode(description, seeds.at(j), generality_level);
    sum += suite.embed_image(x).cosine(text);
  }
  return {sum / static_cast<double>(n), n};
}

/// V = relevance - lambda * penalty, each term over its own seed set.
inline ObjectiveValue objective_value(const Description& description, ClassLabel target_class, double lambda,
                                      double generality_level, const OracleSuite& suite,
                                      const EvaluationSeeds& seeds) {
  if (seeds.relevance.empty() || seeds.generality.empty())
    throw InvalidInput("objective_value requires non-empty seed sets");
  const auto rel = estimate_relevance(description, target_class, seeds.relevance.size(), generality_level, suite,
                                      SeedStream::explicit_list(seeds.relevance));
  const auto gen = estimate_generality_penalty(description, seeds.generality.size(), generality_level, suite,
                                               SeedStream::explicit_list(seeds.generality));
  return ObjectiveValue::make(rel.value(), gen.mean_cosine, lambda);
}

/// The run's canonical evaluation: n_final_samples per term, purpose-tagged
/// seeds detached from any node, at the most specific scheduled level.
inline ObjectiveValue objective_value(const Description& description, ClassLabel target_class, const Config& cfg,
                                      const OracleSuite& suite) {
  return objective_value(description, target_class, cfg.lambda, cfg.evaluation_generality(), suite,
                         EvaluationSeeds::for_run(cfg.run_seed, cfg.n_final_samples));
}

}  // namespace domain_bridge
