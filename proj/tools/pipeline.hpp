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
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "cosg/metrics.hpp"

namespace cosg::cli {

/// Extracts aligned feature streams for every manifest clip of the selected
/// speaker and fits normalisation statistics on the training split.
///
/// Store layout: config.ini, manifest.sha1, clips.csv, stats.rgt,
/// skeleton.bvh and features/<id>.rgt.
void run_prepare(const std::filesystem::path& manifest, const std::filesystem::path& out, RunConfig config);

/// Trains on the store's training split. The run directory receives
/// config.ini, seed, manifest.sha1, train_log.csv, model.rgt (parameters and
/// normalisation statistics) and skeleton.bvh. When a loss turns non-finite
/// the last finite epoch is written before the error propagates.
void run_train(const std::filesystem::path& store, const std::filesystem::path& out, const RunConfig& config);

/// Synthesises motion for a speech recording and its transcript and writes
/// it as BVH on the run's skeleton.
void run_generate(const std::filesystem::path& run, const std::filesystem::path& audio,
                  const std::filesystem::path& transcript, const std::filesystem::path& out);

struct GeneratedSet {
  std::string name;
  std::filesystem::path dir;
};

/// Compares each generated directory of BVH files with the reference
/// directory (pairs matched by file name) and writes metrics.csv,
/// metrics.txt and metrics.svg under `out`. The first row is the reference
/// compared with itself. The feature-space FGD encoder is trained on
/// `fgd_train` (default: the reference set).
std::vector<MetricsReport> run_evaluate(const std::vector<GeneratedSet>& generated,
                                        const std::filesystem::path& reference, const std::filesystem::path& out,
                                        const RunConfig& config,
                                        const std::optional<std::filesystem::path>& fgd_train = std::nullopt);

}  // namespace cosg::cli
