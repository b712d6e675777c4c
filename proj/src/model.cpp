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

#include "cosg/model.hpp"

#include <cmath>

#include "cosg/errors.hpp"

namespace cosg {
namespace {

constexpr std::array<Modality, kModalities> kAll = {Modality::kText, Modality::kAudio, Modality::kGesture};

std::size_t idx(Modality m) { return static_cast<std::size_t>(m); }

}  // namespace

std::string modality_name(Modality m) {
  switch (m) {
    case Modality::kText: return "text";
    case Modality::kAudio: return "audio";
    case Modality::kGesture: return "gesture";
  }
  throw ConfigError("unknown modality tag " + std::to_string(static_cast<int>(m)));
}

Modality modality_from_index(int index) {
  if (index < 0 || index >= static_cast<int>(kModalities)) {
    throw ConfigError("unknown modality tag " + std::to_string(index));
  }
  return static_cast<Modality>(index);
}

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string("model.") + name + " must be positive");
  };
  positive(word_dim, "word_dim");
  positive(mel_dim, "mel_dim");
  positive(rhythm_dim, "rhythm_dim");
  positive(gesture_dim, "gesture_dim");
  positive(text_width, "text_width");
  positive(audio_width, "audio_width");
  positive(hidden, "hidden");
  positive(domain_hidden, "domain_hidden");
  positive(gen_width, "gen_width");
  positive(gen_layers, "gen_layers");
  positive(gen_heads, "gen_heads");
  positive(gen_ff, "gen_ff");
  positive(disc_hidden, "disc_hidden");
  positive(disc_layers, "disc_layers");
  if (conv_kernel % 2 == 0) throw ConfigError("model.conv_kernel must be odd");
  if (gen_width % gen_heads != 0) throw ConfigError("model.gen_width must be divisible by model.gen_heads");
}

std::size_t ModelConfig::generator_input() const {
  return (use_repr ? 2 * kModalities : kModalities) * hidden + rhythm_dim;
}

// ---------------------------------------------------------------------------
// Construction

ReprGesture::ReprGesture(const ModelConfig& config, std::uint64_t seed) : config_(config), rng_(seed) {
  config_.validate();
  const ModelConfig& c = config_;
  add_linear("text.conv", c.conv_kernel * c.word_dim, c.text_width);
  add_linear("audio.conv", c.conv_kernel * c.mel_dim, c.audio_width);
  const std::array<std::size_t, kModalities> widths = {c.text_width, c.audio_width, c.gesture_dim};
  for (Modality m : kAll) {
    const std::string name = modality_name(m);
    add_linear(name + ".proj", widths[idx(m)], c.hidden);
    add_const(name + ".ln.g", {c.hidden}, 1.0);
    add_const(name + ".ln.b", {c.hidden}, 0.0);
  }
  if (c.use_repr) {
    add_linear("shared", c.hidden, c.hidden);
    for (Modality m : kAll) add_linear("private." + modality_name(m), c.hidden, c.hidden);
    add_linear("domain.l1", c.hidden, c.domain_hidden);
    add_linear("domain.l2", c.domain_hidden, kModalities);
    for (Modality m : kAll) add_linear("decoder." + modality_name(m), c.hidden, c.hidden);
  }
  add_linear("gen.in", c.generator_input(), c.gen_width);
  for (std::size_t l = 0; l < c.gen_layers; ++l) {
    const std::string p = "gen." + std::to_string(l) + ".";
    add_linear(p + "qkv", c.gen_width, 3 * c.gen_width);
    add_linear(p + "out", c.gen_width, c.gen_width);
    add_const(p + "ln1.g", {c.gen_width}, 1.0);
    add_const(p + "ln1.b", {c.gen_width}, 0.0);
    add_linear(p + "ff1", c.gen_width, c.gen_ff);
    add_linear(p + "ff2", c.gen_ff, c.gen_width);
    add_const(p + "ln2.g", {c.gen_width}, 1.0);
    add_const(p + "ln2.b", {c.gen_width}, 0.0);
  }
  add_linear("gen.out", c.gen_width, c.gesture_dim);
  if (c.use_repr) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(c.disc_hidden));
    for (std::size_t l = 0; l < c.disc_layers; ++l) {
      const std::size_t in = l == 0 ? c.gesture_dim : 2 * c.disc_hidden;
      for (const char* dir : {"fwd", "bwd"}) {
        const std::string p = "disc." + std::to_string(l) + "." + dir + ".";
        add_random(p + "wi", {in, 3 * c.disc_hidden}, bound);
        add_random(p + "bi", {3 * c.disc_hidden}, bound);
        add_random(p + "wh", {c.disc_hidden, 3 * c.disc_hidden}, bound);
        add_random(p + "bh", {3 * c.disc_hidden}, bound);
      }
    }
    add_linear("disc.out", 2 * c.disc_hidden, 1);
  }
}

Parameter& ReprGesture::add_random(const std::string& name, Shape shape, double bound) {
  Tensor value = random_uniform(std::move(shape), -bound, bound, rng_);
  order_.push_back(name);
  return params_.emplace(name, Parameter(name, std::move(value))).first->second;
}

Parameter& ReprGesture::add_const(const std::string& name, Shape shape, double value) {
  order_.push_back(name);
  return params_.emplace(name, Parameter(name, Tensor(std::move(shape), value))).first->second;
}

void ReprGesture::add_linear(const std::string& name, std::size_t in, std::size_t out) {
  add_random(name + ".w", {in, out}, std::sqrt(6.0 / static_cast<double>(in + out)));
  add_const(name + ".b", {out}, 0.0);
}

Parameter& ReprGesture::param(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("model has no parameter '" + name + "'");
  return it->second;
}

std::vector<Parameter*> ReprGesture::all_params() {
  std::vector<Parameter*> out;
  for (const auto& n : order_) out.push_back(&params_.at(n));
  return out;
}

std::vector<Parameter*> ReprGesture::params_with_prefix(const std::string& prefix) {
  std::vector<Parameter*> out;
  for (const auto& n : order_)
    if (n.rfind(prefix, 0) == 0) out.push_back(&params_.at(n));
  return out;
}

std::vector<Parameter*> ReprGesture::generator_params() {
  std::vector<Parameter*> out;
  for (const auto& n : order_)
    if (n.rfind("disc.", 0) != 0) out.push_back(&params_.at(n));
  return out;
}

std::vector<Parameter*> ReprGesture::discriminator_params() { return params_with_prefix("disc."); }

std::size_t ReprGesture::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) n += p.value.size();
  return n;
}

void ReprGesture::save(Checkpoint& ck, const std::string& prefix) const {
  for (const auto& n : order_) ck.put(prefix + n, params_.at(n).value);
}

void ReprGesture::load(const Checkpoint& ck, const std::string& prefix) {
  for (const auto& n : order_) {
    const Tensor& t = ck.at(prefix + n);
    Parameter& p = params_.at(n);
    if (t.shape() != p.value.shape()) {
      throw DataError("checkpoint tensor " + prefix + n + " has shape " + shape_string(t.shape()) + ", expected " +
                      shape_string(p.value.shape()));
    }
    p.value = t;
  }
}

// ---------------------------------------------------------------------------
// Forward pieces

Var ReprGesture::apply_linear(Graph& g, Var x, const std::string& name) {
  return linear(x, g.parameter(param(name + ".w")), g.parameter(param(name + ".b")));
}

Var ReprGesture::encode_modality(Graph& g, Var input, Modality m, const BatchLayout& layout) {
  const std::string name = modality_name(m);
  const std::array<std::size_t, kModalities> widths = {config_.word_dim, config_.mel_dim, config_.gesture_dim};
  if (input.cols() != widths[idx(m)] || input.rows() != layout.rows()) {
    throw DimensionError(name + " input " + shape_string(input.shape()) + " does not match [" +
                         std::to_string(layout.rows()) + "x" + std::to_string(widths[idx(m)]) + "]");
  }
  Var x = input;
  if (m != Modality::kGesture) {
    x = leaky_relu(apply_linear(g, unfold_time(x, config_.conv_kernel, layout.length), name + ".conv"));
  }
  x = leaky_relu(apply_linear(g, x, name + ".proj"));
  return layer_norm(x, g.parameter(param(name + ".ln.g")), g.parameter(param(name + ".ln.b")));
}

ReprPair ReprGesture::project_repr(Graph& g, Var u, Modality m) {
  if (!config_.use_repr) throw ConfigError("project_repr: model built without representation encoders");
  const std::string name = modality_name(m);
  if (u.cols() != config_.hidden) {
    throw DimensionError("project_repr: u_" + name + " has shape " + shape_string(u.shape()) + ", expected width " +
                         std::to_string(config_.hidden));
  }
  return {sigmoid(apply_linear(g, u, "shared")), sigmoid(apply_linear(g, u, "private." + name))};
}

Encoded ReprGesture::encode(Graph& g, Var text, Var audio, Var gesture, const BatchLayout& layout) {
  Encoded enc;
  const std::array<Var, kModalities> inputs = {text, audio, gesture};
  for (Modality m : kAll) {
    enc.u[idx(m)] = encode_modality(g, inputs[idx(m)], m, layout);
    if (config_.use_repr) enc.repr[idx(m)] = project_repr(g, enc.u[idx(m)], m);
  }
  return enc;
}

Var ReprGesture::classify_domain(Graph& g, Var h) {
  return apply_linear(g, leaky_relu(apply_linear(g, h, "domain.l1")), "domain.l2");
}

Var ReprGesture::domain_loss(Graph& g, const Encoded& enc, bool reverse) {
  Var total;
  for (Modality m : kAll) {
    const ReprPair& r = enc.repr[idx(m)];
    Var h = config_.adversary_target == AdversaryTarget::kShared ? r.shared : r.specific;
    if (reverse) h = grad_reverse(h);
    Var ce = cross_entropy_rows(classify_domain(g, h), idx(m));
    total = m == Modality::kText ? ce : add(total, ce);
  }
  return total;
}

Var ReprGesture::reconstruct(Graph& g, const ReprPair& repr, Modality m) {
  return apply_linear(g, add(repr.shared, repr.specific), "decoder." + modality_name(m));
}

Var ReprGesture::recon_loss(Graph& g, const Encoded& enc) {
  std::array<Var, kModalities> rec;
  for (Modality m : kAll) rec[idx(m)] = reconstruct(g, enc.repr[idx(m)], m);
  return recon_loss_of(enc.u, rec);
}

Var ReprGesture::generate(Graph& g, const Encoded& enc, Var rhythm, const BatchLayout& layout) {
  const ModelConfig& c = config_;
  if (rhythm.rows() != layout.rows() || rhythm.cols() != c.rhythm_dim) {
    throw DimensionError("generate: rhythm " + shape_string(rhythm.shape()) + " does not match [" +
                         std::to_string(layout.rows()) + "x" + std::to_string(c.rhythm_dim) + "]");
  }
  std::vector<Var> parts;
  for (Modality m : kAll) {
    if (c.use_repr) {
      parts.push_back(enc.repr[idx(m)].shared);
      parts.push_back(enc.repr[idx(m)].specific);
    } else {
      parts.push_back(enc.u[idx(m)]);
    }
  }
  parts.push_back(rhythm);
  for (const Var& p : parts) {
    if (p.rows() != layout.rows()) {
      throw DimensionError("generate: streams disagree in length: " + shape_string(p.shape()) + " vs " +
                           std::to_string(layout.rows()) + " rows");
    }
  }
  Var x = apply_linear(g, concat_cols(parts), "gen.in");
  auto cached = position_cache_.find(layout.length);
  if (cached == position_cache_.end())
    cached = position_cache_.emplace(layout.length, position_encoding(layout.length, c.gen_width)).first;
  const Tensor& pe = cached->second;
  Tensor tiled(layout.rows(), c.gen_width);
  for (std::size_t b = 0; b < layout.windows; ++b)
    std::copy(pe.data(), pe.data() + pe.size(), tiled.data() + b * pe.size());
  x = add(x, g.constant(std::move(tiled)));

  const std::size_t dk = c.gen_width / c.gen_heads;
  const double scale_qk = 1.0 / std::sqrt(static_cast<double>(dk));
  for (std::size_t l = 0; l < c.gen_layers; ++l) {
    const std::string p = "gen." + std::to_string(l) + ".";
    Var qkv = apply_linear(g, x, p + "qkv");
    std::vector<Var> windows;
    for (std::size_t b = 0; b < layout.windows; ++b) {
      Var rows = layout.windows == 1 ? qkv : slice_rows(qkv, b * layout.length, layout.length);
      std::vector<Var> heads;
      for (std::size_t h = 0; h < c.gen_heads; ++h) {
        Var q = slice_cols(rows, h * dk, dk);
        Var k = slice_cols(rows, c.gen_width + h * dk, dk);
        Var v = slice_cols(rows, 2 * c.gen_width + h * dk, dk);
        Var att = softmax_rows(scale(matmul_nt(q, k), scale_qk));
        heads.push_back(matmul(att, v));
      }
      windows.push_back(heads.size() == 1 ? heads[0] : concat_cols(heads));
    }
    Var att = windows.size() == 1 ? windows[0] : concat_rows(windows);
    x = layer_norm(add(x, apply_linear(g, att, p + "out")), g.parameter(param(p + "ln1.g")),
                   g.parameter(param(p + "ln1.b")));
    Var ff = apply_linear(g, leaky_relu(apply_linear(g, x, p + "ff1")), p + "ff2");
    x = layer_norm(add(x, ff), g.parameter(param(p + "ln2.g")), g.parameter(param(p + "ln2.b")));
  }
  return apply_linear(g, x, "gen.out");
}

Var ReprGesture::gru_direction(Graph& g, Var inputs, const std::string& name, std::size_t windows,
                               bool backward) {
  Var xp = linear(inputs, g.parameter(param(name + "wi")), g.parameter(param(name + "bi")));
  Var wh = g.parameter(param(name + "wh"));
  Var bh = g.parameter(param(name + "bh"));
  return gru_sequence(xp, wh, bh, windows, backward);
}

Var ReprGesture::discriminate(Graph& g, Var gesture, const BatchLayout& layout) {
  if (!config_.use_repr) throw ConfigError("discriminate: model built without a discriminator");
  if (gesture.cols() != config_.gesture_dim || gesture.rows() != layout.rows()) {
    throw DimensionError("discriminate: input " + shape_string(gesture.shape()) + " does not match [" +
                         std::to_string(layout.rows()) + "x" + std::to_string(config_.gesture_dim) + "]");
  }
  const std::size_t b_count = layout.windows, t_count = layout.length;
  std::vector<std::size_t> to_time(layout.rows()), to_batch(layout.rows());
  for (std::size_t b = 0; b < b_count; ++b) {
    for (std::size_t t = 0; t < t_count; ++t) {
      to_time[t * b_count + b] = b * t_count + t;
      to_batch[b * t_count + t] = t * b_count + b;
    }
  }
  Var x = b_count == 1 ? gesture : gather_rows(gesture, to_time);
  for (std::size_t l = 0; l < config_.disc_layers; ++l) {
    const std::string p = "disc." + std::to_string(l) + ".";
    const Var dirs[] = {gru_direction(g, x, p + "fwd.", b_count, false),
                        gru_direction(g, x, p + "bwd.", b_count, true)};
    x = concat_cols(dirs);
  }
  Var prob = sigmoid(apply_linear(g, x, "disc.out"));
  return b_count == 1 ? prob : gather_rows(prob, to_batch);
}

// ---------------------------------------------------------------------------
// Losses

Var gesture_loss(Var g, Var g_hat, const LossWeights& w) {
  if (g.shape() != g_hat.shape()) {
    throw DimensionError("gesture_loss: " + shape_string(g.shape()) + " vs " + shape_string(g_hat.shape()));
  }
  Var r = sub(g, g_hat);
  return add(scale(mean(huber(r, w.huber_delta)), w.alpha), scale(mean(square(r)), w.beta));
}

Var recon_loss_of(std::span<const Var> u, std::span<const Var> u_hat) {
  if (u.size() != u_hat.size() || u.empty()) throw DimensionError("recon_loss: modality lists differ in size");
  Var total;
  for (std::size_t m = 0; m < u.size(); ++m) {
    Var term = mean(square(sub(u[m], u_hat[m])));
    total = m == 0 ? term : add(total, term);
  }
  return scale(total, 1.0 / static_cast<double>(u.size()));
}

Var discriminator_loss(Var d_real, Var d_fake) {
  return add(binary_cross_entropy(d_real, 1.0), binary_cross_entropy(d_fake, 0.0));
}

Var generator_adversarial_loss(Var d_fake) { return binary_cross_entropy(d_fake, 1.0); }

Tensor position_encoding(std::size_t length, std::size_t width) {
  Tensor pe(length, width);
  for (std::size_t t = 0; t < length; ++t) {
    for (std::size_t i = 0; i < width; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(i - i % 2) / static_cast<double>(width));
      const double a = static_cast<double>(t) * freq;
      pe(t, i) = i % 2 == 0 ? std::sin(a) : std::cos(a);
    }
  }
  return pe;
}

}  // namespace cosg
