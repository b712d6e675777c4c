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

#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace cosg::cli {

struct CheckResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct CheckOptions {
  /// The cosg executable, used by the end-to-end determinism check.
  std::filesystem::path cli;
  /// Directory holding valid/ and malformed/ BVH fixtures.
  std::filesystem::path fixtures;
  /// Scratch space; created if missing.
  std::filesystem::path work;
  /// Criterion ids to run; empty runs all ten.
  std::vector<int> only;
};

/// Runs the acceptance criteria in order, reporting each result through
/// `report` as soon as it is known.
std::vector<CheckResult> run_checks(const CheckOptions& options,
                                    const std::function<void(const CheckResult&)>& report);

std::string format_check(const CheckResult& r);

}  // namespace cosg::cli
