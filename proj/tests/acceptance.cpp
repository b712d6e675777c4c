// Copyright (c) 2026 The cosg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <CLI11.hpp>
#include <iostream>

#include "checks.hpp"

int main(int argc, char** argv) {
  cosg::cli::CheckOptions opts;
  CLI::App app{"cosg acceptance checks"};
  app.add_option("--cli", opts.cli, "Path to the cosg executable")->required()->check(CLI::ExistingFile);
  app.add_option("--fixtures", opts.fixtures, "BVH fixture root")->required()->check(CLI::ExistingDirectory);
  app.add_option("--work", opts.work, "Scratch directory")->required();
  app.add_option("--only", opts.only, "Criterion ids to run");
  CLI11_PARSE(app, argc, argv);

  std::size_t passed = 0, total = 0;
  cosg::cli::run_checks(opts, [&](const cosg::cli::CheckResult& r) {
    std::cout << cosg::cli::format_check(r) << std::endl;
    passed += r.pass;
    ++total;
  });
  std::cout << passed << "/" << total << " criteria passed" << std::endl;
  return passed == total ? 0 : 1;
}
