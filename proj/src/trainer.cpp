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

#include "cosg/trainer.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "cosg/errors.hpp"

namespace cosg {
namespace {

template <typename F>
Var named(const char* component, F&& build) {
  try {
    return build();
  } catch (const NumericError& e) {
    throw NumericError(std::string(component) + " became non-finite: " + e.what());
  }
}

Tensor pad_rows(const Tensor& x, std::size_t begin, std::size_t count) {
  Tensor out(count, x.cols());
  for (std::size_t r = 0; r < count; ++r) {
    const std::size_t src = std::min(begin + r, x.rows() - 1);
    std::copy(x.data() + src * x.cols(), x.data() + (src + 1) * x.cols(), out.data() + r * x.cols());
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Batches

Batch make_batch(std::span<const Sample* const> samples, std::size_t seed) {
  if (samples.empty()) throw DataError("make_batch: no samples");
  const std::size_t length = samples.front()->gesture.rows();
  if (seed >= length) throw ConfigError("seed length must be shorter than the window");
  std::vector<Tensor> text, audio, rhythm, gesture;
  for (const Sample* s : samples) {
    if (s->gesture.rows() != length || s->text.rows() != length || s->audio.rows() != length ||
        s->rhythm.rows() != length) {
      throw DimensionError("make_batch: samples differ in length");
    }
    text.push_back(s->text);
    audio.push_back(s->audio);
    rhythm.push_back(s->rhythm);
    gesture.push_back(s->gesture);
  }
  Batch b;
  b.layout = {samples.size(), length};
  b.seed = seed;
  b.text = concat_rows(std::span<const Tensor>(text));
  b.audio = concat_rows(std::span<const Tensor>(audio));
  b.rhythm = concat_rows(std::span<const Tensor>(rhythm));
  b.gesture = concat_rows(std::span<const Tensor>(gesture));
  b.gesture_input = Tensor(b.gesture.shape());
  const std::size_t d = b.gesture.cols();
  for (std::size_t w = 0; w < samples.size(); ++w) {
    for (std::size_t t = 0; t < length; ++t) {
      const std::size_t row = w * length + t;
      if (t < seed) {
        std::copy(b.gesture.data() + row * d, b.gesture.data() + (row + 1) * d, b.gesture_input.data() + row * d);
      } else {
        b.target_rows.push_back(row);
      }
    }
  }
  return b;
}

std::vector<Sample> samples_from_windows(std::span<const TrainWindow> windows) {
  std::vector<Sample> out;
  for (const auto& w : windows) {
    if (w.modalities.size() != 3) throw DataError("training window must carry text, audio and rhythm streams");
    out.push_back({w.modalities[0], w.modalities[1], w.modalities[2], w.gesture});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Losses

double weighted_total(const LossBreakdown& l, const LossWeights& w) {
  return l.gesture + l.gamma * l.gan + w.delta * l.domain + w.epsilon * l.recon;
}

LossGraph build_losses(Graph& g, ReprGesture& model, const Batch& batch, const TrainConfig& config, double gamma,
                       bool with_gan) {
  const bool repr = model.config().use_repr;
  const LossWeights& w = config.weights;
  LossGraph lg;
  lg.enc = model.encode(g, g.constant(batch.text), g.constant(batch.audio), g.constant(batch.gesture_input),
                        batch.layout);
  lg.generated = model.generate(g, lg.enc, g.constant(batch.rhythm), batch.layout);
  Tensor target(batch.target_rows.size(), batch.gesture.cols());
  for (std::size_t i = 0; i < batch.target_rows.size(); ++i) {
    const double* src = batch.gesture.data() + batch.target_rows[i] * batch.gesture.cols();
    std::copy(src, src + batch.gesture.cols(), target.data() + i * batch.gesture.cols());
  }
  lg.gesture = named("l_gesture", [&] {
    return gesture_loss(g.constant(std::move(target)), gather_rows(lg.generated, batch.target_rows), w);
  });
  if (repr && config.use_domain) lg.domain = named("l_domain", [&] { return model.domain_loss(g, lg.enc); });
  if (repr && config.use_recon) lg.recon = named("l_recon", [&] { return model.recon_loss(g, lg.enc); });
  if (repr && config.use_gan && with_gan) {
    lg.gan = named("l_gan", [&] {
      return generator_adversarial_loss(model.discriminate(g, lg.generated, batch.layout));
    });
  }
  lg.total = named("l_total", [&] {
    Var t = lg.gesture;
    if (lg.gan.graph && gamma != 0.0) t = add(t, scale(lg.gan, gamma));
    if (lg.domain.graph) t = add(t, scale(lg.domain, w.delta));
    if (lg.recon.graph) t = add(t, scale(lg.recon, w.epsilon));
    return t;
  });
  return lg;
}

// ---------------------------------------------------------------------------
// Trainer

Trainer::Trainer(ReprGesture& model, TrainConfig config)
    : model_(model),
      config_(config),
      gen_opt_(model.generator_params(), config.adam),
      disc_opt_(model.discriminator_params(), config.adam),
      rng_(config.seed) {
  if (config_.batch_size == 0) throw ConfigError("train.batch_size must be positive");
}

bool Trainer::gan_active() const { return config_.use_gan && model_.config().use_repr; }

double Trainer::gamma_for(std::size_t epoch) const {
  if (!gan_active() || epoch < config_.warmup_epochs) return 0.0;
  return config_.weights.gamma;
}

LossBreakdown Trainer::step(const Batch& batch, std::size_t epoch) {
  const double gamma = gamma_for(epoch);
  LossBreakdown out;
  out.epoch = epoch;
  out.gamma = gamma;
  out.repr = model_.config().use_repr;

  // Discriminator update on the detached generator output, then the
  // generator-side objective is evaluated against the updated critic.
  Graph g;
  TrainConfig without_gan = config_;
  without_gan.use_gan = false;
  LossGraph lg = build_losses(g, model_, batch, without_gan, gamma, false);
  if (gan_active()) {
    if (gamma > 0.0) {
      Graph dg;
      const Tensor parts[] = {batch.gesture, lg.generated.value()};
      const BatchLayout both{2 * batch.layout.windows, batch.layout.length};
      Var prob = model_.discriminate(dg, dg.constant(concat_rows(std::span<const Tensor>(parts))), both);
      Var d_loss = named("l_disc", [&] {
        return discriminator_loss(slice_rows(prob, 0, batch.layout.rows()),
                                  slice_rows(prob, batch.layout.rows(), batch.layout.rows()));
      });
      disc_opt_.zero_grad();
      dg.backward(d_loss);
      disc_opt_.step();
      out.disc = dg.item(d_loss);
    }
    lg.gan = named("l_gan", [&] {
      return generator_adversarial_loss(model_.discriminate(g, lg.generated, batch.layout));
    });
    if (gamma != 0.0) lg.total = named("l_total", [&] { return add(lg.total, scale(lg.gan, gamma)); });
  }
  out.gesture = g.item(lg.gesture);
  if (lg.gan.graph) out.gan = g.item(lg.gan);
  if (lg.domain.graph) out.domain = g.item(lg.domain);
  if (lg.recon.graph) out.recon = g.item(lg.recon);
  out.total = weighted_total(out, config_.weights);

  gen_opt_.zero_grad();
  g.backward(lg.total);
  gen_opt_.step();
  ++steps_;
  return out;
}

LossBreakdown Trainer::epoch(std::span<const Sample> samples, std::size_t epoch) {
  if (samples.empty()) throw DataError("no training windows");
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  rng_.shuffle(order.begin(), order.end());

  LossBreakdown agg;
  agg.epoch = epoch;
  agg.gamma = gamma_for(epoch);
  agg.repr = model_.config().use_repr;
  double seen = 0.0;
  for (std::size_t begin = 0; begin < order.size(); begin += config_.batch_size) {
    if (config_.max_steps > 0 && steps_ >= config_.max_steps) break;
    const std::size_t end = std::min(order.size(), begin + config_.batch_size);
    std::vector<const Sample*> members;
    for (std::size_t i = begin; i < end; ++i) members.push_back(&samples[order[i]]);
    const LossBreakdown l = step(make_batch(members, config_.seed_frames), epoch);
    const double n = static_cast<double>(members.size());
    agg.gesture += n * l.gesture;
    agg.gan += n * l.gan;
    agg.domain += n * l.domain;
    agg.recon += n * l.recon;
    agg.disc += n * l.disc;
    seen += n;
  }
  if (seen > 0.0) {
    agg.gesture /= seen;
    agg.gan /= seen;
    agg.domain /= seen;
    agg.recon /= seen;
    agg.disc /= seen;
  }
  agg.total = weighted_total(agg, config_.weights);
  return agg;
}

std::vector<LossBreakdown> Trainer::fit(std::span<const Sample> samples) {
  std::vector<LossBreakdown> log;
  for (std::size_t e = 0; e < config_.epochs; ++e) {
    if (config_.max_steps > 0 && steps_ >= config_.max_steps) break;
    log.push_back(epoch(samples, e));
  }
  return log;
}

void write_train_log(const std::filesystem::path& path, std::span<const LossBreakdown> log) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "epoch,l_gesture,l_gan,l_domain,l_recon,l_total,gamma_effective,l_disc\n";
  auto num = [](double v) { return fmt::format("{:.17g}", v); };
  for (const auto& l : log) {
    const std::string na = "NA";
    out << l.epoch << ',' << num(l.gesture) << ',' << (l.repr ? num(l.gan) : na) << ','
        << (l.repr ? num(l.domain) : na) << ',' << (l.repr ? num(l.recon) : na) << ',' << num(l.total) << ','
        << num(l.gamma) << ',' << (l.repr ? num(l.disc) : na) << '\n';
  }
}

std::vector<LossBreakdown> read_train_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open training log " + path.string());
  std::vector<LossBreakdown> log;
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty training log", 1);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    if (cells.size() != 8) throw ParseError(path.string() + ": expected 8 columns", line_no);
    LossBreakdown l;
    auto get = [&](std::size_t i) {
      if (cells[i] == "NA") {
        l.repr = false;
        return 0.0;
      }
      try {
        return std::stod(cells[i]);
      } catch (const std::exception&) {
        throw ParseError(path.string() + ": bad value '" + cells[i] + "'", line_no);
      }
    };
    l.epoch = static_cast<std::size_t>(get(0));
    l.gesture = get(1);
    l.gan = get(2);
    l.domain = get(3);
    l.recon = get(4);
    l.total = get(5);
    l.gamma = get(6);
    l.disc = get(7);
    log.push_back(l);
  }
  return log;
}

// ---------------------------------------------------------------------------
// Inference

Tensor generate_window(ReprGesture& model, const Tensor& text, const Tensor& audio, const Tensor& rhythm,
                       const Tensor& seed, std::size_t length) {
  const std::size_t d = model.config().gesture_dim;
  if (seed.size() > 0 && (seed.rows() > length || seed.cols() != d)) {
    throw DimensionError("generate_window: seed " + shape_string(seed.shape()) + " does not fit the window");
  }
  Tensor gesture(length, d);
  std::copy(seed.data(), seed.data() + seed.size(), gesture.data());
  Graph g;
  const BatchLayout layout{1, length};
  const Encoded enc = model.encode(g, g.constant(text), g.constant(audio), g.constant(std::move(gesture)), layout);
  return model.generate(g, enc, g.constant(rhythm), layout).value();
}

Tensor synthesize_long(ReprGesture& model, const Tensor& text, const Tensor& audio, const Tensor& rhythm,
                       const std::optional<Tensor>& initial_seed, std::size_t chunk, std::size_t seed_len) {
  const std::size_t frames = text.rows();
  const std::size_t d = model.config().gesture_dim;
  if (audio.rows() != frames || rhythm.rows() != frames) {
    throw DimensionError("synthesize_long: text, audio and rhythm streams differ in length");
  }
  if (seed_len >= chunk) throw ConfigError("synthesize_long: seed length must be shorter than the chunk");
  if (frames < chunk) {
    throw DataError("synthesize_long: " + std::to_string(frames) + " frames is shorter than one " +
                    std::to_string(chunk) + "-frame window");
  }
  Tensor out(frames, d);
  if (initial_seed) {
    if (initial_seed->rows() != seed_len || initial_seed->cols() != d) {
      throw DimensionError("synthesize_long: initial seed must be [" + std::to_string(seed_len) + "x" +
                           std::to_string(d) + "], got " + shape_string(initial_seed->shape()));
    }
    std::copy(initial_seed->data(), initial_seed->data() + initial_seed->size(), out.data());
  }
  const std::size_t stride = chunk - seed_len;
  for (std::size_t start = 0;; start += stride) {
    const Tensor seed = out.slice_rows(start, seed_len);
    const Tensor gen = generate_window(model, pad_rows(text, start, chunk), pad_rows(audio, start, chunk),
                                       pad_rows(rhythm, start, chunk), seed, chunk);
    const std::size_t keep = std::min(chunk, frames - start);
    for (std::size_t r = seed_len; r < keep; ++r)
      std::copy(gen.data() + r * d, gen.data() + (r + 1) * d, out.data() + (start + r) * d);
    if (start + chunk >= frames) break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Probe

double probe_accuracy(const std::array<Tensor, kModalities>& train, const std::array<Tensor, kModalities>& test,
                      std::size_t hidden, std::size_t epochs, std::uint64_t seed) {
  const std::size_t d = train[0].cols();
  const NormStats stats = fit_norm_stats(std::span<const Tensor>(train.data(), train.size()));
  Rng rng(seed);
  const double b1 = std::sqrt(6.0 / static_cast<double>(d + hidden));
  const double b2 = std::sqrt(6.0 / static_cast<double>(hidden + kModalities));
  Parameter w1("probe.l1.w", random_uniform({d, hidden}, -b1, b1, rng));
  Parameter c1("probe.l1.b", Tensor(Shape{hidden}));
  Parameter w2("probe.l2.w", random_uniform({hidden, kModalities}, -b2, b2, rng));
  Parameter c2("probe.l2.b", Tensor(Shape{kModalities}));
  Adam opt({&w1, &c1, &w2, &c2}, AdamConfig{.lr = 1e-2, .beta1 = 0.9, .beta2 = 0.999, .eps = 1e-8});
  std::array<Tensor, kModalities> train_z, test_z;
  for (std::size_t m = 0; m < kModalities; ++m) {
    train_z[m] = normalize(train[m], stats);
    test_z[m] = normalize(test[m], stats);
  }
  auto logits = [&](Graph& g, const Tensor& x) {
    Var h = leaky_relu(linear(g.constant(x), g.parameter(w1), g.parameter(c1)));
    return linear(h, g.parameter(w2), g.parameter(c2));
  };
  for (std::size_t e = 0; e < epochs; ++e) {
    Graph g;
    Var loss;
    for (std::size_t m = 0; m < kModalities; ++m) {
      Var ce = cross_entropy_rows(logits(g, train_z[m]), m);
      loss = m == 0 ? ce : add(loss, ce);
    }
    opt.zero_grad();
    g.backward(loss);
    opt.step();
  }
  std::size_t correct = 0, total = 0;
  for (std::size_t m = 0; m < kModalities; ++m) {
    Graph g;
    const Tensor out = logits(g, test_z[m]).value();
    for (std::size_t r = 0; r < out.rows(); ++r) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < kModalities; ++c)
        if (out(r, c) > out(r, best)) best = c;
      correct += best == m;
      ++total;
    }
  }
  return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

}  // namespace cosg
