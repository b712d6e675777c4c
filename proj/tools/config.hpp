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
#include <string>

#include "cosg/metrics.hpp"
#include "cosg/model.hpp"
#include "cosg/trainer.hpp"

namespace cosg::cli {

struct DataConfig {
  std::string speaker;  // empty: keep every speaker
  std::string vectors = "vectors.txt";
  std::size_t word_dim = 300;
  double fps = 30.0;
  std::size_t max_length_mismatch = 1;
  std::size_t window = 100;
  std::size_t stride = 10;
  bool root_relative = false;
  std::string left_shoulder = "b_l_shoulder";
  std::string right_shoulder = "b_r_shoulder";
};

struct AblationFlags {
  bool no_gan = false;
  bool no_recon = false;
  bool no_domain = false;
  bool no_repr = false;
};

struct EvalConfig {
  MetricsOptions metrics;
  FgdModelConfig fgd;
  /// Frames a generated clip may differ from its reference before the pair
  /// is rejected; within this the longer one is truncated.
  std::size_t length_tolerance = 30;
};

/// Every tunable of the pipeline. Sections of the INI file: [data], [model],
/// [train], [loss], [metrics].
struct RunConfig {
  DataConfig data;
  ModelConfig model;
  TrainConfig train;
  AblationFlags ablation;
  EvalConfig eval;

  /// Loads `path` on top of the current values. Unknown sections or keys and
  /// malformed values raise ConfigError.
  void merge_file(const std::filesystem::path& path);
  void merge_string(const std::string& ini);

  /// Zeroes the loss weight of each set ablation flag (the repr bypass for
  /// no_repr) and propagates the flags into the model and trainer settings.
  void apply_ablations();
  void validate() const;

  std::string to_ini() const;
  void save(const std::filesystem::path& path) const;
  static RunConfig load(const std::filesystem::path& path);
};

}  // namespace cosg::cli
