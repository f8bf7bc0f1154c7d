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

#include "domain_bridge/synthetic/universe.hpp"
#include "domain_bridge/types.hpp"

// Small, fully enumerable universes used as the engine's calibration bench:
// 12 tokens, 32 dimensions, 3-token samples, three disjoint 2-token classes.

namespace domain_bridge::synthetic {

inline constexpr std::size_t kBenchVocab = 12;
inline constexpr std::size_t kBenchDim = 32;
inline constexpr std::size_t kBenchMaxTokens = 3;
inline constexpr std::size_t kBenchClasses = 3;
inline constexpr std::size_t kBenchClassSize = 2;
// A 2-token class completed to 3 tokens lands near cos = sqrt(2/3) from its
// centroid, so the acceptance threshold has to sit well below that.
inline constexpr double kBenchAcceptThreshold = 0.6;

inline UniverseSpec bench_spec(std::uint64_t index) {
  return make_random_spec(index, kBenchVocab, kBenchDim, kBenchMaxTokens, kBenchClasses, kBenchClassSize,
                          kBenchAcceptThreshold, /*disjoint_classes=*/true);
}

/// Engine config for bench runs. Captions here are 3 words long, so the
/// verbosity threshold is lowered for summaries to be probed at all.
inline Config bench_config(std::uint64_t run_seed = 0) {
  Config cfg;
  cfg.run_seed = run_seed;
  cfg.verbosity_threshold = 2;
  return cfg;
}

/// Every single-token description of the universe, in token order.
inline std::vector<Description> single_token_roots(const UniverseSpec& spec) {
  std::vector<Description> out;
  for (std::size_t t = 0; t < spec.vocab_size; ++t) out.emplace_back(token_name(t, spec.vocab_size));
  return out;
}

}  // namespace domain_bridge::synthetic
