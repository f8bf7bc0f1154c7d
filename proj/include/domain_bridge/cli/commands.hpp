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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "domain_bridge/canonical_json.hpp"
#include "domain_bridge/cli/manifest.hpp"
#include "domain_bridge/errors.hpp"
#include "domain_bridge/objective.hpp"
#include "domain_bridge/search.hpp"
#include "domain_bridge/synthetic/bench.hpp"
#include "domain_bridge/synthetic/brute_force.hpp"
#include "domain_bridge/tree.hpp"

namespace domain_bridge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitPartial = 3;
inline constexpr int kExitOracle = 4;

/// Maps the engine's exceptions onto exit codes, reporting on `err`.
template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const OracleUnavailable& e) {
    err << "error: oracle unavailable: " << e.what() << '\n';
    return kExitOracle;
  } catch (const OracleProtocolError& e) {
    err << "error: oracle protocol violation: " << e.what() << '\n';
    return kExitOracle;
  } catch (const BudgetExceeded& e) {
    err << "error: " << e.what() << '\n';
    return kExitPartial;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

inline void write_file_atomically(const std::filesystem::path& p, const std::string& bytes) {
  auto tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << bytes;
    if (!out) throw InvalidInput("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, p);
}

inline std::string tree_file_name(ClassLabel c) { return "class_" + std::to_string(c.index) + ".tree.json"; }
inline std::string report_file_name(ClassLabel c) { return "class_" + std::to_string(c.index) + ".report.json"; }

struct Spend {
  BudgetCounts search{};
  BudgetCounts selection{};
};

/// Oracle spend recorded in a report file, if the file exists.
inline std::optional<Spend> read_spend(const std::filesystem::path& report_path) {
  if (!std::filesystem::exists(report_path)) return std::nullopt;
  const Json j = parse_json_file(report_path);
  try {
    const Json& b = j.at("budget_spent");
    return Spend{domain_bridge::detail::counts_from_json(b.at("search"), "budget_spent.search"),
                 domain_bridge::detail::counts_from_json(b.at("selection"), "budget_spent.selection")};
  } catch (const Json::exception& e) {
    throw ParseError(report_path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// investigate

/// Runs one search per manifest class, sharing one budget. Outputs are
/// written only once every class has finished or stopped on budget, so an
/// unreachable oracle leaves the output directory untouched.
inline int cmd_investigate(const std::filesystem::path& manifest_path, const std::filesystem::path& out_dir,
                           bool resume, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunManifest m = load_manifest(manifest_path);
    ActiveSuite active = make_active_suite(m);
    SearchOptions opt;
    opt.template_digests = active.template_digests;
    opt.log = [&err](std::string_view line) { err << line << '\n'; };

    std::map<std::string, std::string> files;
    Json best = Json::object();
    bool partial = false;
    for (ClassLabel c : m.classes) {
      const auto tree_path = out_dir / tree_file_name(c);
      std::optional<Spend> earlier;
      SearchReport report = [&] {
        if (resume && std::filesystem::exists(tree_path)) {
          SearchTree tree = deserialize_tree(read_file(tree_path));
          if (tree.target_class != c)
            throw InvalidInput(tree_path.string() + " belongs to class " + std::to_string(tree.target_class.index));
          earlier = read_spend(out_dir / report_file_name(c));
          return resume_search(std::move(tree), m.config, active.suite, opt);
        }
        return run_search(m.initial, c, m.config, active.suite, opt);
      }();
      // Spend accumulates over every invocation that worked on this class.
      if (earlier) {
        domain_bridge::detail::accumulate(report.search_spent, earlier->search);
        domain_bridge::detail::accumulate(report.selection_spent, earlier->selection);
      }
      partial = partial || report.partial;
      files[tree_file_name(c)] = serialize_tree(report.tree);
      files[report_file_name(c)] = canonical_dump(report.to_json());
      best[std::to_string(c.index)] = report.partial ? Json(nullptr) : Json(report.best_description.text());
      out << "class " << c.index << ": "
          << (report.partial ? std::string("PARTIAL") : report.best_description.text()) << '\n';
    }
    files["summary.json"] = canonical_dump({{"best_descriptions", best},
                                            {"config_digest", to_hex64(m.config.digest())},
                                            {"status", partial ? "partial" : "complete"}});
    std::filesystem::create_directories(out_dir);
    for (const auto& [name, bytes] : files) write_file_atomically(out_dir / name, bytes);
    return partial ? kExitPartial : kExitOk;
  });
}

// ---------------------------------------------------------------------------
// evaluate

/// Printed with round-trip precision, unlike the canonical form used for files.
inline Json objective_json(const ObjectiveValue& v) {
  return {{"lambda", v.lambda}, {"penalty", v.penalty}, {"relevance", v.relevance}, {"value", v.value}};
}

inline int cmd_evaluate(const std::filesystem::path& manifest_path, std::size_t class_index,
                        const std::string& description, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunManifest m = load_manifest(manifest_path);
    if (m.universe && class_index >= m.universe->classes.size())
      throw InvalidInput("class " + std::to_string(class_index) + " not in universe");
    ActiveSuite active = make_active_suite(m);
    if (const auto n = active.suite.target->num_classes(); n && class_index >= *n)
      throw InvalidInput("class " + std::to_string(class_index) + " out of range");
    const ObjectiveValue v = objective_value(Description(description), ClassLabel{class_index}, m.config,
                                             active.suite);
    out << objective_json(v).dump(2) << '\n';
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------
// brute-force

inline int cmd_brute_force(const std::filesystem::path& universe_path, std::size_t class_index,
                           std::optional<double> lambda, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto spec = synthetic::universe_from_json(parse_json_file(universe_path));
    if (class_index >= spec.classes.size())
      throw InvalidInput("class " + std::to_string(class_index) + " not in universe");
    if (synthetic::candidate_count(spec) > synthetic::kMaxBruteForceCandidates)
      throw InvalidInput("universe has too many candidate descriptions for exhaustive search");
    Config cfg;
    if (lambda) cfg.lambda = *lambda;
    cfg.validate();
    const auto r = synthetic::brute_force_optimum(spec, ClassLabel{class_index}, cfg);
    const Json result = {{"candidates_evaluated", r.candidates_evaluated},
                         {"description", r.best.text()},
                         {"objective", objective_json(r.value)}};
    out << result.dump(2) << '\n';
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------
// report

namespace detail {

inline std::string fixed(double v, int digits = 4) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

}  // namespace detail

/// Text rendering of a tree: status, ranked candidates, best relevance per
/// depth, oracle spend when known, and word frequencies over correct-sample
/// captions.
inline std::string render_report(const SearchTree& tree, const std::optional<Spend>& spend = std::nullopt,
                                 std::size_t max_rows = 20) {
  std::ostringstream o;
  const bool partial = tree.status != RunStatus::kComplete || !tree.selection;
  o << "class " << tree.target_class.index << "  " << (partial ? "PARTIAL" : "COMPLETE") << "  iterations "
    << tree.iteration << "  nodes " << tree.nodes.size() << "  config " << to_hex64(tree.config_digest) << '\n';

  if (tree.selection) {
    const auto& s = *tree.selection;
    o << "\nbest: " << s.best_description.text() << "  V=" << detail::fixed(s.best_objective.value) << '\n';
    o << "\n rank  node      value  relevance    penalty  description\n";
    std::size_t rank = 0;
    for (const auto& c : s.candidates) {
      if (++rank > max_rows) break;
      std::string id = c.node_id ? std::to_string(*c.node_id) : "-";
      char line[128];
      std::snprintf(line, sizeof line, "%5zu  %4s  %9s  %9s  %9s  ", rank, id.c_str(),
                    detail::fixed(c.objective.value).c_str(), detail::fixed(c.objective.relevance).c_str(),
                    detail::fixed(c.objective.penalty).c_str());
      o << line << c.description.text() << '\n';
    }
    if (s.candidates.size() > max_rows) o << "  ... " << s.candidates.size() - max_rows << " more\n";
  }

  std::map<std::size_t, Relevance> per_depth;
  std::map<std::size_t, std::size_t> scored_at;
  for (const auto& [id, n] : tree.nodes) {
    if (!n.relevance) continue;
    ++scored_at[n.depth];
    auto [it, fresh] = per_depth.emplace(n.depth, *n.relevance);
    if (!fresh && it->second < *n.relevance) it->second = *n.relevance;
  }
  o << "\ndepth  scored  best relevance\n";
  for (const auto& [d, r] : per_depth)
    o << std::setw(5) << d << "  " << std::setw(6) << scored_at[d] << "  " << r.k << "/" << r.m << " ("
      << detail::fixed(r.value(), 3) << ")\n";

  if (spend) {
    o << "\noracle calls (search + selection)\n";
    for (std::size_t i = 0; i < kOracleKindCount; ++i) {
      if (spend->search[i] + spend->selection[i] == 0) continue;
      o << "  " << std::left << std::setw(12) << oracle_kind_name(static_cast<OracleKind>(i)) << std::right
        << std::setw(8) << spend->search[i] << " + " << spend->selection[i] << '\n';
    }
  } else {
    o << "\noracle calls: no report file next to the tree\n";
  }

  std::map<std::string, std::size_t> words;
  std::size_t n_captions = 0;
  for (const auto& [id, n] : tree.nodes) {
    for (const auto& c : n.captions) {
      ++n_captions;
      for (const auto& w : c.words()) ++words[w];
    }
  }
  if (n_captions > 0) {
    std::vector<std::pair<std::string, std::size_t>> ranked(words.begin(), words.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    o << "\ncaption words over " << n_captions << " distinct captions\n";
    for (std::size_t i = 0; i < ranked.size() && i < 15; ++i)
      o << "  " << std::left << std::setw(20) << ranked[i].first << std::right << std::setw(5) << ranked[i].second
        << '\n';
  }
  return o.str();
}

inline int cmd_report(const std::filesystem::path& tree_path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const SearchTree tree = deserialize_tree(read_file(tree_path));
    out << render_report(tree, read_spend(tree_path.parent_path() / report_file_name(tree.target_class)));
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------
// make-universe

/// Writes a bench universe (see synthetic/bench.hpp) as a universe file.
inline int cmd_make_universe(std::uint64_t index, const std::filesystem::path& out_path, std::ostream& out,
                             std::ostream& err) {
  return guarded(err, [&] {
    write_file_atomically(out_path, canonical_dump(synthetic::universe_to_json(synthetic::bench_spec(index))));
    out << out_path.string() << '\n';
    return kExitOk;
  });
}

}  // namespace domain_bridge::cli
