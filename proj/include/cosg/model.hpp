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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cosg/checkpoint.hpp"
#include "cosg/graph.hpp"
#include "cosg/random.hpp"

namespace cosg {

enum class Modality { kText = 0, kAudio = 1, kGesture = 2 };
inline constexpr std::size_t kModalities = 3;
std::string modality_name(Modality m);
/// Throws ConfigError for a value outside the three modalities.
Modality modality_from_index(int index);

enum class AdversaryTarget { kShared, kSpecific };

struct ModelConfig {
  std::size_t word_dim = 300;
  std::size_t mel_dim = 80;
  std::size_t rhythm_dim = 3;
  std::size_t gesture_dim = 216;
  std::size_t text_width = 32;    // text convolution output
  std::size_t audio_width = 128;  // audio convolution output
  std::size_t conv_kernel = 3;
  std::size_t hidden = 48;        // d_h
  std::size_t domain_hidden = 24;
  std::size_t gen_width = 256;
  std::size_t gen_layers = 2;
  std::size_t gen_heads = 4;
  std::size_t gen_ff = 512;
  std::size_t disc_hidden = 64;
  std::size_t disc_layers = 2;
  AdversaryTarget adversary_target = AdversaryTarget::kShared;
  /// When false the projected sequences u_t, u_a, u_g feed the generator
  /// directly and the representation branch (encoders, domain classifier,
  /// decoders) and the discriminator are not built.
  bool use_repr = true;

  void validate() const;
  std::size_t generator_input() const;
};

/// Per-modality outputs of the representation branch for one batch.
struct ReprPair {
  Var shared;    // h^c
  Var specific;  // h^p
};

struct Encoded {
  std::array<Var, kModalities> u;
  std::array<ReprPair, kModalities> repr;  // unset when use_repr is false
};

/// Rows of a batch: `windows` sequences of `length` frames stacked in order.
struct BatchLayout {
  std::size_t windows = 1;
  std::size_t length = 1;
  std::size_t rows() const { return windows * length; }
};

class ReprGesture {
 public:
  ReprGesture(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }

  /// Input layers: text/audio convolutions, then for every modality a
  /// linear map with leaky ReLU and layer normalisation to width d_h.
  Var encode_modality(Graph& g, Var input, Modality m, const BatchLayout& layout);
  /// h^c from the shared encoder, h^p from modality m's private encoder.
  ReprPair project_repr(Graph& g, Var u, Modality m);
  Encoded encode(Graph& g, Var text, Var audio, Var gesture, const BatchLayout& layout);

  /// Sum over modalities of the 3-way cross-entropy of the domain classifier
  /// applied to gradient-reversed representations. `reverse = false` drops
  /// the reversal (used to compare gradients).
  Var domain_loss(Graph& g, const Encoded& enc, bool reverse = true);
  /// Per-modality reconstruction of u_m from h^c + h^p.
  Var reconstruct(Graph& g, const ReprPair& repr, Modality m);
  Var recon_loss(Graph& g, const Encoded& enc);
  /// Attention generator over the six representations (or the three u_m)
  /// concatenated with the rhythm features. Output rows x gesture_dim.
  Var generate(Graph& g, const Encoded& enc, Var rhythm, const BatchLayout& layout);
  /// Per-frame probability of being real, rows x 1, in batch row order.
  Var discriminate(Graph& g, Var gesture, const BatchLayout& layout);
  /// Domain classifier logits for a representation sequence.
  Var classify_domain(Graph& g, Var h);

  /// Parameters updated by the generator-side optimiser: input layers,
  /// encoders, domain classifier, decoders and the generator.
  std::vector<Parameter*> generator_params();
  std::vector<Parameter*> discriminator_params();
  std::vector<Parameter*> all_params();
  /// Parameters whose name starts with `prefix`.
  std::vector<Parameter*> params_with_prefix(const std::string& prefix);
  Parameter& param(const std::string& name);
  std::size_t parameter_count() const;

  void save(Checkpoint& ck, const std::string& prefix = "model/") const;
  /// Copies values for every parameter; throws DataError when a tensor is
  /// missing or has the wrong shape.
  void load(const Checkpoint& ck, const std::string& prefix = "model/");

 private:
  Parameter& add_random(const std::string& name, Shape shape, double bound);
  Parameter& add_const(const std::string& name, Shape shape, double value);
  void add_linear(const std::string& name, std::size_t in, std::size_t out);
  Var apply_linear(Graph& g, Var x, const std::string& name);
  Var gru_direction(Graph& g, Var inputs_time_major, const std::string& name, std::size_t windows,
                    bool backward);

  ModelConfig config_;
  Rng rng_;
  std::vector<std::string> order_;  // creation order
  std::map<std::string, Parameter> params_;
  std::map<std::size_t, Tensor> position_cache_;  // by sequence length
};

// ---------------------------------------------------------------------------
// Losses

struct LossWeights {
  double alpha = 300.0;
  double beta = 50.0;
  double gamma = 5.0;
  double delta = 0.1;
  double epsilon = 0.1;
  double huber_delta = 1.0;
};

/// alpha * mean Huber(g - g_hat) + beta * mean (g - g_hat)^2, both means over
/// every entry.
Var gesture_loss(Var g, Var g_hat, const LossWeights& w);
/// Mean over modalities of mean_t ||u - u_hat||^2 / d.
Var recon_loss_of(std::span<const Var> u, std::span<const Var> u_hat);
/// -mean log D(real) - mean log(1 - D(fake)), probabilities clamped.
Var discriminator_loss(Var d_real, Var d_fake);
/// Non-saturating generator term -mean log D(fake).
Var generator_adversarial_loss(Var d_fake);

/// Sinusoidal position encoding, length x width.
Tensor position_encoding(std::size_t length, std::size_t width);

}  // namespace cosg
