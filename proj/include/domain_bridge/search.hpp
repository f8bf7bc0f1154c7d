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
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "domain_bridge/errors.hpp"
#include "domain_bridge/objective.hpp"
#include "domain_bridge/oracles.hpp"
#include "domain_bridge/seeds.hpp"
#include "domain_bridge/tree.hpp"
#include "domain_bridge/types.hpp"

namespace domain_bridge {

/// Value tolerance under which final-selection candidates count as tied.
inline constexpr double kTieTolerance = 1e-9;

struct SearchOptions {
  /// Return after this many iterations of the current call, leaving the
  /// tree resumable. Used to model interrupted runs.
  std::optional<std::size_t> stop_after_iterations;
  /// Receives diagnostic lines (discarded enrich variants and the like).
  std::function<void(std::string_view)> log;
  /// Extra entries recorded in the tree, e.g. prompt template digests.
  std::map<std::string, std::string> template_digests;
};

struct SearchReport {
  Description best_description;
  ObjectiveValue best_objective;
  SearchTree tree;
  std::size_t iterations_run = 0;
  BudgetCounts search_spent{};
  BudgetCounts selection_spent{};
  std::vector<Candidate> candidates;
  bool partial = false;

  std::uint64_t total_spent(OracleKind k) const {
    return search_spent[static_cast<std::size_t>(k)] + selection_spent[static_cast<std::size_t>(k)];
  }

  Json to_json() const {
    Json cands = Json::array();
    for (const auto& c : candidates) {
      cands.push_back({{"node_id", c.node_id ? Json(*c.node_id) : Json(nullptr)},
                       {"description", c.description.text()},
                       {"objective", detail::objective_to_json(c.objective)}});
    }
    return {{"target_class", tree.target_class.index},
            {"status", partial ? "partial" : "complete"},
            {"best_description", partial ? Json(nullptr) : Json(best_description.text())},
            {"best_objective", partial ? Json(nullptr) : detail::objective_to_json(best_objective)},
            {"iterations_run", iterations_run},
            {"budget_spent",
             {{"search", detail::counts_to_json(search_spent)}, {"selection", detail::counts_to_json(selection_spent)}}},
            {"candidates", cands}};
  }
};

namespace detail {

inline void log_line(const SearchOptions& opt, const std::string& line) {
  if (opt.log) opt.log(line);
}

inline BudgetCounts diff(const BudgetCounts& after, const BudgetCounts& before) {
  BudgetCounts d{};
  for (std::size_t i = 0; i < kOracleKindCount; ++i) d[i] = after[i] - before[i];
  return d;
}

inline void accumulate(BudgetCounts& into, const BudgetCounts& delta) {
  for (std::size_t i = 0; i < kOracleKindCount; ++i) into[i] += delta[i];
}

/// Earliest scored node carrying the same canonical text, other than `self`.
inline std::optional<NodeId> scored_twin(const SearchTree& tree, const Description& d, NodeId self) {
  for (const auto& [id, n] : tree.nodes) {
    if (id != self && n.relevance && n.description == d) return id;
  }
  return std::nullopt;
}

inline void remove_from_frontier(SearchTree& tree, NodeId id) {
  tree.frontier.erase(std::remove(tree.frontier.begin(), tree.frontier.end(), id), tree.frontier.end());
}

inline void debug_check(const SearchTree& tree) {
#ifndef NDEBUG
  check_tree_invariants(tree);
#else
  (void)tree;
#endif
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Step 1

/// Builds the forest: one depth-0 pending root per distinct initial
/// description, in the given order.
inline SearchTree init_tree(const std::vector<Description>& initial, const Config& cfg, ClassLabel target_class) {
  if (initial.empty()) throw InvalidInput("init_tree requires at least one initial description");
  cfg.validate();
  SearchTree tree;
  tree.config = cfg;
  tree.config_digest = cfg.digest();
  tree.target_class = target_class;
  for (const auto& d : dedupe_descriptions(initial)) tree.frontier.push_back(tree.add_node(std::nullopt, d));
  detail::debug_check(tree);
  return tree;
}

// ---------------------------------------------------------------------------
// Steps 2-3

/// Scores a pending node with m fresh samples at `generality_level`. A node
/// whose text already has a score elsewhere in the tree copies it without
/// spending oracle calls; the returned estimate then has no samples.
inline RelevanceEstimate expand_node(SearchTree& tree, NodeId id, const OracleSuite& suite, double generality_level) {
  SearchNode& node = tree.node(id);
  if (node.status != NodeStatus::kPending) throw NoOp("node " + std::to_string(id) + " is already scored");
  RelevanceEstimate est;
  if (auto twin = detail::scored_twin(tree, node.description, id)) {
    const Relevance r = *tree.node(*twin).relevance;
    est.k = r.k;
    est.m = r.m;
    node.duplicate_of = *twin;
  } else {
    est = estimate_relevance(node.description, tree.target_class, tree.config.m_samples_per_node, generality_level,
                             suite, SeedStream::derived(tree.config.run_seed, id, SeedPurpose::kRelevance));
  }
  node.relevance = est.relevance();
  node.status = NodeStatus::kScored;
  detail::remove_from_frontier(tree, id);
  return est;
}

// ---------------------------------------------------------------------------
// Steps 4-5

/// Enriches a zero-relevance shallow node. Each variant is probed with m
/// samples; those with k >= 1 become scored children and their correct
/// samples are written to `child_samples`.
inline std::vector<NodeId> maybe_enrich(SearchTree& tree, NodeId id, const OracleSuite& suite, double generality_level,
                                        std::map<NodeId, std::vector<Sample>>& child_samples,
                                        const SearchOptions& opt = {}) {
  const SearchNode& node = tree.node(id);
  if (!node.relevance || node.relevance->k != 0 || node.depth > tree.config.enrich_depth_limit ||
      node.duplicate_of) {
    return {};
  }
  const Description base = node.description;
  const auto variants = suite.enrich(base, tree.config.enrich_variants);
  const std::size_t m = tree.config.m_samples_per_node;
  std::vector<NodeId> children;
  for (std::size_t vi = 0; vi < variants.size(); ++vi) {
    const Description& v = variants[vi];
    std::optional<NodeId> twin = detail::scored_twin(tree, v, id);
    RelevanceEstimate est;
    if (twin) {
      est.k = tree.node(*twin).relevance->k;
      est.m = tree.node(*twin).relevance->m;
    } else {
      est = estimate_relevance(v, tree.target_class, m, generality_level, suite,
                               SeedStream::derived(tree.config.run_seed, id, SeedPurpose::kEnrichProbe, vi * m));
    }
    if (est.k == 0) {
      detail::log_line(opt, "enrich variant '" + v.text() + "' of node " + std::to_string(id) + " discarded (k=0)");
      continue;
    }
    const NodeId child = tree.add_node(id, v);
    SearchNode& c = tree.node(child);
    c.relevance = est.relevance();
    c.status = NodeStatus::kScored;
    c.duplicate_of = twin;
    if (!twin) child_samples[child] = std::move(est.correct_samples);
    children.push_back(child);
  }
  detail::debug_check(tree);
  return children;
}

// ---------------------------------------------------------------------------
// Step 6

/// A child survives only by strictly beating its parent. Equal relevance at
/// 1.0 marks it saturated instead: kept as a candidate, never expanded.
/// Returns whether the node is still eligible for Step 7.
inline bool prune_check(SearchTree& tree, NodeId id) {
  SearchNode& node = tree.node(id);
  if (!node.relevance) throw InvalidInput("prune_check requires a scored node");
  if (node.is_root()) return true;
  const auto& parent = tree.node(*node.parent_id);
  if (!parent.relevance) throw InvalidInput("prune_check requires a scored parent");
  const Relevance c = *node.relevance;
  const Relevance p = *parent.relevance;
  if (c > p) return true;
  if (c == p && c.saturated() && p.saturated()) {
    node.status = NodeStatus::kSaturated;
    return false;
  }
  node.status = NodeStatus::kTerminated;
  return false;
}

// ---------------------------------------------------------------------------
// Step 7

inline std::vector<Description> extract_child_descriptions(const std::vector<Sample>& correct_samples,
                                                           const OracleSuite& suite) {
  std::vector<Description> out;
  out.reserve(correct_samples.size());
  for (const auto& x : correct_samples) out.push_back(suite.caption(x));
  return dedupe_descriptions(std::move(out));
}

// ---------------------------------------------------------------------------
// Step 8

/// Leaves short descriptions alone. A verbose one competes against its l
/// summaries on probe relevance; ties go to fewer words, then lexicographic
/// order. Candidate i is probed with seeds [i*m, (i+1)*m) of `probe_seeds`.
inline Description summarize_and_select(const Description& description, ClassLabel target_class, const Config& cfg,
                                        const OracleSuite& suite, double generality_level,
                                        const SeedStream& probe_seeds) {
  if (description.word_count() <= cfg.verbosity_threshold) return description;
  std::vector<Description> pool{description};
  for (auto& v : suite.summarize(description, cfg.l_summaries, cfg.verbosity_threshold)) pool.push_back(std::move(v));
  pool = dedupe_descriptions(std::move(pool));
  const std::size_t m = cfg.m_samples_per_node;
  std::optional<std::pair<Relevance, std::size_t>> best;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto est =
        estimate_relevance(pool[i], target_class, m, generality_level, suite, probe_seeds.advanced(i * m));
    const Relevance r = est.relevance();
    if (!best) {
      best = {r, i};
      continue;
    }
    const Description& cur = pool[best->second];
    const bool better = r > best->first ||
                        (r == best->first && (pool[i].word_count() < cur.word_count() ||
                                              (pool[i].word_count() == cur.word_count() && pool[i] < cur)));
    if (better) best = {r, i};
  }
  return pool[best->second];
}

// ---------------------------------------------------------------------------
// Step 9

inline std::vector<Description> group_if_needed(const std::vector<Description>& descriptions, const Config& cfg,
                                                const OracleSuite& suite) {
  if (descriptions.size() <= cfg.group_threshold) return descriptions;
  return suite.group(descriptions, cfg.group_target);
}

// ---------------------------------------------------------------------------
// One iteration

namespace detail {

/// Steps 4-10 for a freshly scored node. Non-root nodes are pruned before
/// anything else, so a zero-relevance node only reaches enrichment as a root.
inline void refine_node(SearchTree& tree, NodeId id, const OracleSuite& suite, double g,
                        std::map<NodeId, std::vector<Sample>>& samples, const SearchOptions& opt) {
  if (!tree.node(id).is_root() && !prune_check(tree, id)) return;
  if (tree.node(id).duplicate_of) return;
  if (tree.node(id).relevance->k == 0) {
    for (NodeId child : maybe_enrich(tree, id, suite, g, samples, opt)) refine_node(tree, child, suite, g, samples, opt);
    return;
  }

  const auto it = samples.find(id);
  const std::vector<Sample> correct = it == samples.end() ? std::vector<Sample>{} : std::move(it->second);
  if (it != samples.end()) samples.erase(it);
  auto captions = extract_child_descriptions(correct, suite);
  tree.node(id).captions = captions;
  if (captions.empty()) return;

  const Config& cfg = tree.config;
  std::vector<Description> processed;
  for (std::size_t i = 0; i < captions.size(); ++i) {
    const auto probes = SeedStream::derived(cfg.run_seed, id, SeedPurpose::kSummarizeProbe,
                                            i * (cfg.l_summaries + 1) * cfg.m_samples_per_node);
    processed.push_back(summarize_and_select(captions[i], tree.target_class, cfg, suite, g, probes));
  }
  processed = dedupe_descriptions(std::move(processed));

  // A node at relevance 1.0 cannot be surpassed by any child, so its
  // captions are collated into a single representative.
  if (tree.node(id).relevance->saturated() && processed.size() > 1) processed = suite.group(processed, 1);
  else processed = group_if_needed(processed, cfg, suite);

  for (auto& d : processed) {
    const NodeId child = tree.add_node(id, std::move(d));
    SearchNode& c = tree.node(child);
    if (auto twin = scored_twin(tree, c.description, child)) {
      c.relevance = tree.node(*twin).relevance;
      c.status = NodeStatus::kScored;
      c.duplicate_of = twin;
      prune_check(tree, child);
    } else {
      tree.frontier.push_back(child);
    }
  }
}

inline Relevance best_relevance(const SearchTree& tree) {
  std::optional<Relevance> best;
  for (const auto& [id, n] : tree.nodes)
    if (n.relevance && (!best || *n.relevance > *best)) best = n.relevance;
  return best.value_or(Relevance(0, 1));
}

}  // namespace detail

/// Expands every pending node (Steps 2-3), then refines each in id order
/// (Steps 4-10). Generality follows the configured schedule.
inline void run_iteration(SearchTree& tree, const OracleSuite& suite, const SearchOptions& opt = {}) {
  const double g = tree.config.generality_at(tree.iteration);
  std::vector<NodeId> pending = tree.frontier;
  std::sort(pending.begin(), pending.end());
  std::map<NodeId, std::vector<Sample>> samples;
  for (NodeId id : pending) {
    auto est = expand_node(tree, id, suite, g);
    if (!tree.node(id).duplicate_of) samples[id] = std::move(est.correct_samples);
  }
  for (NodeId id : pending) detail::refine_node(tree, id, suite, g, samples, opt);
  tree.best_history.push_back(detail::best_relevance(tree));
  ++tree.iteration;
  detail::debug_check(tree);
}

/// Step 11: maximum depth (iteration count), patience without strict
/// improvement of the best relevance, or an empty frontier.
inline bool should_terminate(const SearchTree& tree) {
  if (tree.frontier.empty()) return true;
  if (tree.iteration >= tree.config.max_depth) return true;
  std::size_t stall = 0;
  for (std::size_t t = tree.best_history.size(); t >= 2; --t) {
    if (tree.best_history[t - 1] > tree.best_history[t - 2]) break;
    ++stall;
  }
  return stall >= tree.config.no_improvement_patience;
}

// ---------------------------------------------------------------------------
// Final selection

/// Scores every node that carries a relevance with the objective, picks the
/// maximum, collates exact ties through the Grouper and applies the Step 8
/// summarization rule to the winner.
inline Selection select_final(const SearchTree& tree, const OracleSuite& suite) {
  const Config& cfg = tree.config;
  std::map<std::string, ObjectiveValue> memo;
  auto evaluate = [&](const Description& d) {
    auto it = memo.find(d.text());
    if (it != memo.end()) return it->second;
    const ObjectiveValue v = objective_value(d, tree.target_class, cfg, suite);
    memo.emplace(d.text(), v);
    return v;
  };

  std::vector<Candidate> candidates;
  for (const auto& [id, n] : tree.nodes) {
    if (!n.relevance || memo.count(n.description.text())) continue;
    candidates.push_back({id, n.description, evaluate(n.description)});
  }
  if (candidates.empty()) throw InvalidInput("final selection requires at least one scored node");
  auto rank = [](std::vector<Candidate>& c) {
    std::stable_sort(c.begin(), c.end(), [](const Candidate& a, const Candidate& b) {
      if (a.objective.value != b.objective.value) return a.objective.value > b.objective.value;
      if (a.node_id.has_value() != b.node_id.has_value()) return a.node_id.has_value();
      return a.node_id < b.node_id;
    });
  };
  rank(candidates);

  const double top = candidates.front().objective.value;
  std::vector<Description> tied;
  for (const auto& c : candidates)
    if (c.objective.value >= top - kTieTolerance) tied.push_back(c.description);

  Description best = candidates.front().description;
  ObjectiveValue best_value = candidates.front().objective;
  auto consider = [&](const Description& d) {
    if (d == best) return;
    const bool known = memo.count(d.text()) > 0;
    const ObjectiveValue v = evaluate(d);
    if (v.value < best_value.value - kTieTolerance) return;
    if (!known) candidates.push_back({std::nullopt, d, v});
    best = d;
    best_value = v;
  };
  if (tied.size() > 1) consider(suite.group(tied, 1).front());
  consider(summarize_and_select(best, tree.target_class, cfg, suite, cfg.evaluation_generality(),
                                SeedStream::derived(cfg.run_seed, kDetachedStream, SeedPurpose::kSummarizeProbe)));
  rank(candidates);
  return {best, best_value, std::move(candidates)};
}

// ---------------------------------------------------------------------------
// Drivers

inline SearchReport make_report(const SearchTree& tree, const BudgetCounts& search_spent = {},
                                const BudgetCounts& selection_spent = {}) {
  SearchReport r{.best_description = tree.selection ? tree.selection->best_description
                                                    : tree.node(tree.nodes.begin()->first).description,
                 .tree = tree};
  if (tree.selection) {
    r.best_objective = tree.selection->best_objective;
    r.candidates = tree.selection->candidates;
  }
  r.iterations_run = tree.iteration;
  r.search_spent = search_spent;
  r.selection_spent = selection_spent;
  r.partial = tree.status == RunStatus::kPartial || !tree.selection;
  return r;
}

/// Runs iterations from the tree's current state until termination, then
/// performs final selection. Budget exhaustion rolls the tree back to the
/// last iteration boundary and marks it partial. The report's spend covers
/// this call only; the tree itself carries no spend so that replays from a
/// warm cache serialize identically.
inline SearchReport continue_search(SearchTree tree, const OracleSuite& suite, const SearchOptions& opt = {}) {
  for (const auto& [k, v] : opt.template_digests) tree.template_digests[k] = v;
  if (tree.status == RunStatus::kComplete) return make_report(tree);
  BudgetCounts search{}, selection{};
  tree.status = RunStatus::kRunning;
  std::size_t done = 0;
  while (!should_terminate(tree)) {
    if (opt.stop_after_iterations && done >= *opt.stop_after_iterations) return make_report(tree, search);
    const SearchTree snapshot = tree;
    const BudgetCounts before = suite.budget->snapshot();
    try {
      run_iteration(tree, suite, opt);
    } catch (const BudgetExceeded& e) {
      tree = snapshot;
      detail::accumulate(search, detail::diff(suite.budget->snapshot(), before));
      tree.status = RunStatus::kPartial;
      detail::log_line(opt, std::string("search interrupted: ") + e.what());
      return make_report(tree, search);
    }
    detail::accumulate(search, detail::diff(suite.budget->snapshot(), before));
    ++done;
  }
  const BudgetCounts before = suite.budget->snapshot();
  try {
    tree.selection = select_final(tree, suite);
  } catch (const BudgetExceeded& e) {
    detail::accumulate(selection, detail::diff(suite.budget->snapshot(), before));
    tree.status = RunStatus::kPartial;
    detail::log_line(opt, std::string("final selection interrupted: ") + e.what());
    return make_report(tree, search, selection);
  }
  detail::accumulate(selection, detail::diff(suite.budget->snapshot(), before));
  tree.status = RunStatus::kComplete;
  detail::debug_check(tree);
  return make_report(tree, search, selection);
}

inline SearchReport run_search(const std::vector<Description>& initial, ClassLabel target_class, const Config& cfg,
                               const OracleSuite& suite, const SearchOptions& opt = {}) {
  if (const auto n = suite.target->num_classes(); n && target_class.index >= *n)
    throw InvalidInput("target class " + std::to_string(target_class.index) + " out of range");
  return continue_search(init_tree(initial, cfg, target_class), suite, opt);
}

/// Continues a persisted tree. The caller's config must match the digest
/// recorded in the tree, and so must any prompt template digest both sides
/// know; the caller's values then replace the parsed ones.
inline SearchReport resume_search(SearchTree tree, const Config& cfg, const OracleSuite& suite,
                                  const SearchOptions& opt = {}) {
  if (cfg.digest() != tree.config_digest)
    throw ConfigMismatch("config digest " + to_hex64(cfg.digest()) + " does not match tree digest " +
                         to_hex64(tree.config_digest));
  for (const auto& [k, v] : opt.template_digests) {
    const auto it = tree.template_digests.find(k);
    if (it != tree.template_digests.end() && it->second != v)
      throw ConfigMismatch("template " + k + " changed since the tree was written");
  }
  tree.config = cfg;
  return continue_search(std::move(tree), suite, opt);
}

}  // namespace domain_bridge
