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
#include <map>
#include <utility>
#include <vector>

#include "domain_bridge/errors.hpp"
#include "domain_bridge/oracles.hpp"
#include "domain_bridge/seeds.hpp"
#include "domain_bridge/synthetic/universe.hpp"

namespace domain_bridge::synthetic {

struct CloneResult {
  double agreement = 0.0;
  std::size_t held_out = 0;
  /// Labels the learner saw during training, with sample counts.
  std::map<std::size_t, std::size_t> training_labels;
};

/// Follow-up cloning check. For each (class, found description) pair,
/// decodes n_train samples and labels them with the target (conventional
/// cloning), fits a nearest-centroid learner on the image embeddings, then
/// measures label agreement with the target on held-out samples decoded from
/// every class's ground-truth token set.
inline CloneResult clone_follow_up(const Universe& universe,
                                   const std::vector<std::pair<ClassLabel, Description>>& found,
                                   std::size_t n_train, const OracleSuite& suite, std::uint64_t run_seed,
                                   double generality_level = 0.0) {
  if (n_train == 0) throw InvalidInput("clone_follow_up requires n_train >= 1");
  if (found.empty()) throw InvalidInput("clone_follow_up requires at least one found description");

  std::map<std::size_t, std::vector<double>> sums;
  CloneResult result;
  for (const auto& [cls, description] : found) {
    for (std::size_t j = 0; j < n_train; ++j) {
      const Sample x = suite.decode(description, derive_seed(run_seed, cls.index, j, SeedPurpose::kCloneTrain),
                                    generality_level);
      const ClassLabel y = suite.classify(x);
      const Embedding v = suite.embed_image(x);
      auto& sum = sums[y.index];
      sum.resize(v.dim(), 0.0);
      for (std::size_t d = 0; d < v.dim(); ++d) sum[d] += v.values()[d];
      ++result.training_labels[y.index];
    }
  }
  std::vector<std::pair<std::size_t, Embedding>> centroids;
  for (auto& [label, sum] : sums) centroids.emplace_back(label, Embedding(sum));

  std::size_t agree = 0, total = 0;
  for (const auto& cls : universe.spec().classes) {
    const Description truth = universe.render(cls.required_tokens);
    for (std::size_t j = 0; j < n_train; ++j) {
      const Sample x =
          suite.decode(truth, derive_seed(run_seed, cls.label.index, j, SeedPurpose::kCloneHeldOut), generality_level);
      const ClassLabel y = suite.classify(x);
      const Embedding v = suite.embed_image(x);
      std::size_t pred = centroids.front().first;
      double best = -2.0;
      for (const auto& [label, c] : centroids) {
        const double s = v.cosine(c);
        if (s > best) {
          best = s;
          pred = label;
        }
      }
      agree += pred == y.index ? 1 : 0;
      ++total;
    }
  }
  result.held_out = total;
  result.agreement = static_cast<double>(agree) / static_cast<double>(total);
  return result;
}

}  // namespace domain_bridge::synthetic
