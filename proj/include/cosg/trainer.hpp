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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "cosg/adam.hpp"
#include "cosg/model.hpp"
#include "cosg/motion.hpp"

namespace cosg {

/// One training window: all streams share `length` rows and the first
/// `seed` gesture rows are the seed poses.
struct Sample {
  Tensor text;     // T x word_dim
  Tensor audio;    // T x mel_dim
  Tensor rhythm;   // T x rhythm_dim
  Tensor gesture;  // T x gesture_dim, normalised
};

struct Batch {
  BatchLayout layout;
  std::size_t seed = 10;
  Tensor text, audio, rhythm;
  Tensor gesture;        // targets
  Tensor gesture_input;  // seed rows kept, the rest zero
  std::vector<std::size_t> target_rows;  // non-seed rows
};

/// Stacks samples of equal length into one batch.
Batch make_batch(std::span<const Sample* const> samples, std::size_t seed);

/// Converts motion windows whose modalities are (text, audio, rhythm).
std::vector<Sample> samples_from_windows(std::span<const TrainWindow> windows);

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t warmup_epochs = 10;
  std::size_t batch_size = 128;
  std::size_t max_steps = 0;  // 0: no limit
  std::size_t seed_frames = 10;
  std::uint64_t seed = 1;
  AdamConfig adam;
  LossWeights weights;
  bool use_gan = true;
  bool use_recon = true;
  bool use_domain = true;
};

/// Loss components of one step or aggregated over an epoch. Components that
/// are switched off are 0; `repr` is false for a model without the
/// representation branch, whose gan/domain/recon columns are not defined.
struct LossBreakdown {
  std::size_t epoch = 0;
  double gesture = 0.0;
  double gan = 0.0;
  double domain = 0.0;
  double recon = 0.0;
  double total = 0.0;
  double gamma = 0.0;
  double disc = 0.0;
  bool repr = true;
};

/// l_gesture + gamma l_gan + delta l_domain + epsilon l_recon, summed left
/// to right.
double weighted_total(const LossBreakdown& l, const LossWeights& w);

/// Graph nodes of the generator-side objective for one batch.
struct LossGraph {
  Encoded enc;
  Var generated;
  Var gesture, gan, domain, recon, total;  // gan/domain/recon unset when off
};

/// Builds every generator-side loss term. `gamma` weights the adversarial
/// term; with gamma = 0 it is still evaluated when `with_gan` is true.
LossGraph build_losses(Graph& g, ReprGesture& model, const Batch& batch, const TrainConfig& config, double gamma,
                       bool with_gan);

class Trainer {
 public:
  Trainer(ReprGesture& model, TrainConfig config);

  double gamma_for(std::size_t epoch) const;
  bool gan_active() const;
  /// One alternating update: a discriminator step on the detached output
  /// (after warm-up), then a generator/encoder/decoder step.
  LossBreakdown step(const Batch& batch, std::size_t epoch);
  /// Seeded shuffle, batches of batch_size, mean over windows.
  LossBreakdown epoch(std::span<const Sample> samples, std::size_t epoch);
  /// Runs config.epochs epochs (or until max_steps) and returns the log.
  std::vector<LossBreakdown> fit(std::span<const Sample> samples);

  std::size_t steps() const { return steps_; }
  const TrainConfig& config() const { return config_; }

 private:
  ReprGesture& model_;
  TrainConfig config_;
  Adam gen_opt_;
  Adam disc_opt_;
  Rng rng_;
  std::size_t steps_ = 0;
};

/// CSV with columns epoch,l_gesture,l_gan,l_domain,l_recon,l_total,
/// gamma_effective,l_disc; undefined components are written as NA.
void write_train_log(const std::filesystem::path& path, std::span<const LossBreakdown> log);
std::vector<LossBreakdown> read_train_log(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Inference

/// Generates one window; rows [0, seed.rows()) of the gesture input hold the
/// seed poses and the rest are zero. Returns length x gesture_dim.
Tensor generate_window(ReprGesture& model, const Tensor& text, const Tensor& audio, const Tensor& rhythm,
                       const Tensor& seed, std::size_t length);

/// Chained synthesis over a long sequence. Chunk k covers input frames
/// [k (chunk - seed_len), k (chunk - seed_len) + chunk); its seed is the last
/// seed_len frames produced so far. The first chunk uses `initial_seed` (or
/// zeros, the mean pose in normalised space) and those poses are emitted as
/// frames [0, seed_len). The final chunk's inputs are padded by repeating the
/// last frame and its output is truncated to length T.
Tensor synthesize_long(ReprGesture& model, const Tensor& text, const Tensor& audio, const Tensor& rhythm,
                       const std::optional<Tensor>& initial_seed, std::size_t chunk = 100,
                       std::size_t seed_len = 10);

// ---------------------------------------------------------------------------
// Representation probe

/// Freshly initialised classifier with the domain classifier's shape
/// (linear, leaky ReLU, linear) trained by full-batch Adam on `train`
/// (one matrix per modality, label = index) and scored on `test`.
double probe_accuracy(const std::array<Tensor, kModalities>& train, const std::array<Tensor, kModalities>& test,
                      std::size_t hidden, std::size_t epochs, std::uint64_t seed);

}  // namespace cosg
