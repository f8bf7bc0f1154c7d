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

// Command-line front end: investigate, evaluate, brute-force, report.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "domain_bridge/cli/commands.hpp"

namespace cli = domain_bridge::cli;

int main(int argc, char** argv) {
  CLI::App app{"Black-box domain inference for hard-label classifiers"};
  app.require_subcommand(1);

  std::string manifest, out_dir, universe, tree, description, output;
  std::size_t class_index = 0;
  std::uint64_t bench_index = 0;
  bool resume = false;
  std::optional<double> lambda;

  auto* investigate = app.add_subcommand("investigate", "search for a description of every manifest class");
  investigate->add_option("--manifest", manifest, "run manifest (JSON)")->required()->check(CLI::ExistingFile);
  investigate->add_option("--out", out_dir, "output directory")->required();
  investigate->add_flag("--resume", resume, "continue from tree files already in the output directory");

  auto* evaluate = app.add_subcommand("evaluate", "print the objective value of one description");
  evaluate->add_option("--manifest", manifest, "run manifest (JSON)")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--class", class_index, "target class index")->required();
  evaluate->add_option("--description", description, "description text")->required();

  auto* brute = app.add_subcommand("brute-force", "exhaustive optimum over a synthetic universe");
  brute->add_option("--universe", universe, "universe file (JSON)")->required()->check(CLI::ExistingFile);
  brute->add_option("--class", class_index, "target class index")->required();
  brute->add_option("--lambda", lambda, "generality weight (default 0.25)");

  auto* report = app.add_subcommand("report", "render a tree file as text");
  report->add_option("--tree", tree, "tree file (JSON)")->required();

  auto* make_universe = app.add_subcommand("make-universe", "write one of the built-in bench universes");
  make_universe->add_option("--index", bench_index, "bench universe index")->required();
  make_universe->add_option("--out", output, "output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kExitUsage;
  }

  if (investigate->parsed()) return cli::cmd_investigate(manifest, out_dir, resume, std::cout, std::cerr);
  if (evaluate->parsed()) return cli::cmd_evaluate(manifest, class_index, description, std::cout, std::cerr);
  if (brute->parsed()) return cli::cmd_brute_force(universe, class_index, lambda, std::cout, std::cerr);
  if (report->parsed()) return cli::cmd_report(tree, std::cout, std::cerr);
  return cli::cmd_make_universe(bench_index, output, std::cout, std::cerr);
}
