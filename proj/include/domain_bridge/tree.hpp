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
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "domain_bridge/canonical_json.hpp"
#include "domain_bridge/errors.hpp"
#include "domain_bridge/oracles.hpp"
#include "domain_bridge/types.hpp"

namespace domain_bridge {

using NodeId = std::uint64_t;

enum class NodeStatus { kPending, kScored, kTerminated, kSaturated };

inline std::string_view status_name(NodeStatus s) {
  switch (s) {
    case NodeStatus::kPending: return "pending";
    case NodeStatus::kScored: return "scored";
    case NodeStatus::kTerminated: return "terminated";
    case NodeStatus::kSaturated: return "saturated";
  }
  return "pending";
}

inline std::optional<NodeStatus> parse_status(std::string_view s) {
  if (s == "pending") return NodeStatus::kPending;
  if (s == "scored") return NodeStatus::kScored;
  if (s == "terminated") return NodeStatus::kTerminated;
  if (s == "saturated") return NodeStatus::kSaturated;
  return std::nullopt;
}

struct SearchNode {
  NodeId id = 0;
  std::optional<NodeId> parent_id;
  std::size_t depth = 0;
  Description description;
  std::optional<Relevance> relevance;
  NodeStatus status = NodeStatus::kPending;
  std::vector<NodeId> child_ids;
  /// Captions extracted from this node's correctly classified samples.
  std::vector<Description> captions;
  /// Set when the score was copied from an earlier node with the same text.
  std::optional<NodeId> duplicate_of;

  bool is_root() const { return !parent_id.has_value(); }
};

enum class RunStatus { kRunning, kComplete, kPartial };

inline std::string_view run_status_name(RunStatus s) {
  switch (s) {
    case RunStatus::kRunning: return "running";
    case RunStatus::kComplete: return "complete";
    case RunStatus::kPartial: return "partial";
  }
  return "running";
}

struct Candidate {
  std::optional<NodeId> node_id;
  Description description;
  ObjectiveValue objective;
};

struct Selection {
  Description best_description;
  ObjectiveValue best_objective;
  /// Sorted by descending value, ties by node id (detached candidates last).
  std::vector<Candidate> candidates;
};

using BudgetCounts = std::array<std::uint64_t, kOracleKindCount>;

struct SearchTree {
  Config config;
  std::uint64_t config_digest = 0;
  ClassLabel target_class;
  std::map<NodeId, SearchNode> nodes;
  std::vector<NodeId> frontier;
  std::size_t iteration = 0;
  /// Best relevance over all scored nodes after each completed iteration.
  std::vector<Relevance> best_history;
  RunStatus status = RunStatus::kRunning;
  std::map<std::string, std::string> template_digests;
  std::optional<Selection> selection;

  NodeId next_id() const { return nodes.empty() ? 0 : nodes.rbegin()->first + 1; }

  const SearchNode& node(NodeId id) const {
    auto it = nodes.find(id);
    if (it == nodes.end()) throw InvalidInput("unknown node id " + std::to_string(id));
    return it->second;
  }
  SearchNode& node(NodeId id) {
    auto it = nodes.find(id);
    if (it == nodes.end()) throw InvalidInput("unknown node id " + std::to_string(id));
    return it->second;
  }

  std::vector<NodeId> roots() const {
    std::vector<NodeId> out;
    for (const auto& [id, n] : nodes)
      if (n.is_root()) out.push_back(id);
    return out;
  }

  /// Adds a node as the last child of `parent` (or as a root) and returns its id.
  NodeId add_node(std::optional<NodeId> parent, Description description) {
    SearchNode n{.id = next_id(), .parent_id = parent, .depth = 0, .description = std::move(description)};
    if (parent) {
      auto& p = node(*parent);
      n.depth = p.depth + 1;
      p.child_ids.push_back(n.id);
    }
    const NodeId id = n.id;
    nodes.emplace(id, std::move(n));
    return id;
  }
};

// ---------------------------------------------------------------------------
// Invariants

/// Throws InvalidInput naming the first violated invariant.
inline void check_tree_invariants(const SearchTree& tree) {
  auto fail = [](const std::string& msg) { throw InvalidInput("tree invariant violated: " + msg); };
  for (const auto& [id, n] : tree.nodes) {
    const std::string where = "node " + std::to_string(id);
    if (n.id != id) fail(where + ": id field disagrees with key");
    if (n.relevance && (n.relevance->m == 0 || n.relevance->k > n.relevance->m)) fail(where + ": bad relevance");
    if ((n.status == NodeStatus::kPending) == n.relevance.has_value())
      fail(where + ": relevance must be present exactly when the node is not pending");
    // Walk to the root; a walk longer than the node count means a cycle.
    std::size_t steps = 0;
    for (auto cur = n.parent_id; cur; cur = tree.node(*cur).parent_id) {
      if (!tree.nodes.count(*cur)) fail(where + ": dangling parent");
      if (++steps > tree.nodes.size()) fail(where + ": parent links form a cycle");
    }
    if (n.parent_id) {
      const auto& p = tree.node(*n.parent_id);
      if (n.depth != p.depth + 1) fail(where + ": depth is not parent depth + 1");
      if (std::count(p.child_ids.begin(), p.child_ids.end(), id) != 1)
        fail(where + ": parent does not list it exactly once as a child");
    } else if (n.depth != 0) {
      fail(where + ": root depth must be 0");
    }
    for (NodeId c : n.child_ids) {
      auto it = tree.nodes.find(c);
      if (it == tree.nodes.end() || it->second.parent_id != id) fail(where + ": child link not reciprocated");
    }
    if (n.status == NodeStatus::kTerminated) {
      std::vector<NodeId> stack(n.child_ids.begin(), n.child_ids.end());
      while (!stack.empty()) {
        const auto& d = tree.node(stack.back());
        stack.pop_back();
        if (d.status == NodeStatus::kPending) fail(where + ": terminated node has a pending descendant");
        stack.insert(stack.end(), d.child_ids.begin(), d.child_ids.end());
      }
    }
  }
  std::set<NodeId> seen;
  for (NodeId f : tree.frontier) {
    auto it = tree.nodes.find(f);
    if (it == tree.nodes.end() || it->second.status != NodeStatus::kPending)
      fail("frontier entry " + std::to_string(f) + " is not a pending node");
    if (!seen.insert(f).second) fail("frontier entry " + std::to_string(f) + " repeated");
  }
}

// ---------------------------------------------------------------------------
// Serialization

namespace detail {

inline Json counts_to_json(const BudgetCounts& c) {
  Json j = Json::object();
  for (std::size_t i = 0; i < kOracleKindCount; ++i) j[std::string(oracle_kind_name(static_cast<OracleKind>(i)))] = c[i];
  return j;
}

inline Json objective_to_json(const ObjectiveValue& v) {
  return {{"relevance", v.relevance}, {"penalty", v.penalty}, {"lambda", v.lambda}, {"value", v.value}};
}

[[noreturn]] inline void bad(const std::string& field, const std::string& what) {
  throw ParseError(field + ": " + what);
}

inline const Json& field(const Json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object()) bad(where, "expected object");
  auto it = obj.find(key);
  if (it == obj.end()) bad(where + "." + key, "missing");
  return *it;
}

inline std::uint64_t as_uint(const Json& j, const std::string& where) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return j.get<std::uint64_t>();
  bad(where, "expected non-negative integer");
}

inline double as_real(const Json& j, const std::string& where) {
  if (!j.is_number()) bad(where, "expected number");
  return j.get<double>();
}

inline std::string as_string(const Json& j, const std::string& where) {
  if (!j.is_string()) bad(where, "expected string");
  return j.get<std::string>();
}

inline Description as_description(const Json& j, const std::string& where) {
  try {
    return Description(as_string(j, where));
  } catch (const InvalidInput& e) {
    bad(where, e.what());
  }
}

inline BudgetCounts counts_from_json(const Json& j, const std::string& where) {
  BudgetCounts c{};
  if (!j.is_object()) bad(where, "expected object");
  for (std::size_t i = 0; i < kOracleKindCount; ++i) {
    const std::string key(oracle_kind_name(static_cast<OracleKind>(i)));
    if (j.contains(key)) c[i] = as_uint(j.at(key), where + "." + key);
  }
  return c;
}

inline ObjectiveValue objective_from_json(const Json& j, const std::string& where) {
  ObjectiveValue v;
  v.relevance = as_real(field(j, "relevance", where), where + ".relevance");
  v.penalty = as_real(field(j, "penalty", where), where + ".penalty");
  v.lambda = as_real(field(j, "lambda", where), where + ".lambda");
  v.value = as_real(field(j, "value", where), where + ".value");
  return v;
}

}  // namespace detail

inline Json tree_to_json(const SearchTree& tree) {
  Json nodes = Json::array();
  for (const auto& [id, n] : tree.nodes) {
    Json captions = Json::array();
    for (const auto& c : n.captions) captions.push_back(c.text());
    nodes.push_back({{"id", n.id},
                     {"parent_id", n.parent_id ? Json(*n.parent_id) : Json(nullptr)},
                     {"depth", n.depth},
                     {"description", n.description.text()},
                     {"relevance", n.relevance ? Json{{"k", n.relevance->k}, {"m", n.relevance->m}} : Json(nullptr)},
                     {"status", status_name(n.status)},
                     {"child_ids", n.child_ids},
                     {"captions", captions},
                     {"duplicate_of", n.duplicate_of ? Json(*n.duplicate_of) : Json(nullptr)}});
  }
  Json history = Json::array();
  for (const auto& r : tree.best_history) history.push_back({{"k", r.k}, {"m", r.m}});
  Json selection = nullptr;
  if (tree.selection) {
    Json cands = Json::array();
    for (const auto& c : tree.selection->candidates) {
      cands.push_back({{"node_id", c.node_id ? Json(*c.node_id) : Json(nullptr)},
                       {"description", c.description.text()},
                       {"objective", detail::objective_to_json(c.objective)}});
    }
    selection = {{"best_description", tree.selection->best_description.text()},
                 {"best_objective", detail::objective_to_json(tree.selection->best_objective)},
                 {"candidates", cands}};
  }
  return {{"config", tree.config.to_json()},
          {"config_digest", to_hex64(tree.config_digest)},
          {"target_class", tree.target_class.index},
          {"nodes", nodes},
          {"frontier", tree.frontier},
          {"iteration", tree.iteration},
          {"best_history", history},
          {"status", run_status_name(tree.status)},
          {"template_digests", tree.template_digests},
          {"selection", selection}};
}

inline std::string serialize_tree(const SearchTree& tree) { return canonical_dump(tree_to_json(tree)); }

inline SearchTree tree_from_json(const Json& j) {
  using namespace detail;
  if (!j.is_object()) bad("tree", "expected object");
  SearchTree t;
  t.config = Config::from_json(field(j, "config", "tree"), "config");
  {
    const std::string hex = as_string(field(j, "config_digest", "tree"), "config_digest");
    if (hex.size() != 16 || hex.find_first_not_of("0123456789abcdef") != std::string::npos)
      bad("config_digest", "expected 16 lowercase hex digits");
    t.config_digest = std::stoull(hex, nullptr, 16);
  }
  t.target_class.index = as_uint(field(j, "target_class", "tree"), "target_class");

  const Json& nodes = field(j, "nodes", "tree");
  if (!nodes.is_array()) bad("nodes", "expected array");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string w = "nodes[" + std::to_string(i) + "]";
    const Json& jn = nodes[i];
    SearchNode n{.description = as_description(field(jn, "description", w), w + ".description")};
    n.id = as_uint(field(jn, "id", w), w + ".id");
    const Json& parent = field(jn, "parent_id", w);
    if (!parent.is_null()) n.parent_id = as_uint(parent, w + ".parent_id");
    n.depth = as_uint(field(jn, "depth", w), w + ".depth");
    const Json& rel = field(jn, "relevance", w);
    if (!rel.is_null()) {
      const auto k = as_uint(field(rel, "k", w + ".relevance"), w + ".relevance.k");
      const auto m = as_uint(field(rel, "m", w + ".relevance"), w + ".relevance.m");
      if (m == 0 || k > m) bad(w + ".relevance", "requires 0 <= k <= m and m >= 1");
      n.relevance = Relevance(k, m);
    }
    auto st = parse_status(as_string(field(jn, "status", w), w + ".status"));
    if (!st) bad(w + ".status", "unknown status");
    n.status = *st;
    const Json& kids = field(jn, "child_ids", w);
    if (!kids.is_array()) bad(w + ".child_ids", "expected array");
    for (std::size_t c = 0; c < kids.size(); ++c)
      n.child_ids.push_back(as_uint(kids[c], w + ".child_ids[" + std::to_string(c) + "]"));
    if (jn.contains("captions")) {
      const Json& caps = jn.at("captions");
      if (!caps.is_array()) bad(w + ".captions", "expected array");
      for (std::size_t c = 0; c < caps.size(); ++c)
        n.captions.push_back(as_description(caps[c], w + ".captions[" + std::to_string(c) + "]"));
    }
    if (jn.contains("duplicate_of") && !jn.at("duplicate_of").is_null())
      n.duplicate_of = as_uint(jn.at("duplicate_of"), w + ".duplicate_of");
    if (!t.nodes.emplace(n.id, n).second) bad(w + ".id", "duplicate node id");
  }

  // Structural checks, reported against the serialized field that breaks them.
  std::size_t idx = 0;
  for (const auto& [id, n] : t.nodes) {
    const std::string w = "nodes[" + std::to_string(idx++) + "]";
    if (n.parent_id) {
      if (!t.nodes.count(*n.parent_id)) bad(w + ".parent_id", "refers to an unknown node");
      std::size_t steps = 0;
      for (auto cur = n.parent_id; cur; cur = t.nodes.at(*cur).parent_id) {
        if (*cur == id || ++steps > t.nodes.size()) bad(w + ".parent_id", "parent links form a cycle");
        if (!t.nodes.count(*cur)) bad(w + ".parent_id", "refers to an unknown node");
      }
    }
  }

  const Json& frontier = field(j, "frontier", "tree");
  if (!frontier.is_array()) bad("frontier", "expected array");
  for (std::size_t i = 0; i < frontier.size(); ++i)
    t.frontier.push_back(as_uint(frontier[i], "frontier[" + std::to_string(i) + "]"));
  t.iteration = as_uint(field(j, "iteration", "tree"), "iteration");

  const Json& history = field(j, "best_history", "tree");
  if (!history.is_array()) bad("best_history", "expected array");
  for (std::size_t i = 0; i < history.size(); ++i) {
    const std::string w = "best_history[" + std::to_string(i) + "]";
    const auto k = as_uint(field(history[i], "k", w), w + ".k");
    const auto m = as_uint(field(history[i], "m", w), w + ".m");
    if (m == 0 || k > m) bad(w, "requires 0 <= k <= m and m >= 1");
    t.best_history.emplace_back(k, m);
  }
  const std::string status = as_string(field(j, "status", "tree"), "status");
  if (status == "running") t.status = RunStatus::kRunning;
  else if (status == "complete") t.status = RunStatus::kComplete;
  else if (status == "partial") t.status = RunStatus::kPartial;
  else bad("status", "unknown run status");
  const Json& digests = field(j, "template_digests", "tree");
  if (!digests.is_object()) bad("template_digests", "expected object");
  for (auto it = digests.begin(); it != digests.end(); ++it)
    t.template_digests[it.key()] = as_string(it.value(), "template_digests." + it.key());

  const Json& sel = field(j, "selection", "tree");
  if (!sel.is_null()) {
    Selection s{.best_description = as_description(field(sel, "best_description", "selection"),
                                                   "selection.best_description")};
    s.best_objective = objective_from_json(field(sel, "best_objective", "selection"), "selection.best_objective");
    const Json& cands = field(sel, "candidates", "selection");
    if (!cands.is_array()) bad("selection.candidates", "expected array");
    for (std::size_t i = 0; i < cands.size(); ++i) {
      const std::string w = "selection.candidates[" + std::to_string(i) + "]";
      Candidate c{.description = as_description(field(cands[i], "description", w), w + ".description")};
      const Json& nid = field(cands[i], "node_id", w);
      if (!nid.is_null()) c.node_id = as_uint(nid, w + ".node_id");
      c.objective = objective_from_json(field(cands[i], "objective", w), w + ".objective");
      s.candidates.push_back(std::move(c));
    }
    t.selection = std::move(s);
  }

  try {
    check_tree_invariants(t);
  } catch (const InvalidInput& e) {
    throw ParseError(std::string("tree: ") + e.what());
  }
  return t;
}

inline SearchTree deserialize_tree(std::string_view bytes) {
  Json j;
  try {
    j = Json::parse(bytes);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("tree: malformed JSON: ") + e.what());
  }
  return tree_from_json(j);
}

}  // namespace domain_bridge
