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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "cosg/errors.hpp"
#include "cosg/grad_check.hpp"
#include "cosg/model.hpp"
#include "cosg/random.hpp"
#include "cosg/trainer.hpp"

namespace cosg {
namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.word_dim = 6;
  c.mel_dim = 5;
  c.gesture_dim = 12;
  c.text_width = 4;
  c.audio_width = 4;
  c.hidden = 8;
  c.domain_hidden = 4;
  c.gen_width = 8;
  c.gen_layers = 1;
  c.gen_heads = 2;
  c.gen_ff = 8;
  c.disc_hidden = 3;
  c.disc_layers = 2;
  return c;
}

Sample random_sample(const ModelConfig& c, std::size_t length, Rng& rng) {
  return {random_normal({length, c.word_dim}, rng), random_normal({length, c.mel_dim}, rng),
          random_normal({length, c.rhythm_dim}, rng), random_normal({length, c.gesture_dim}, rng)};
}

std::vector<Sample> random_samples(const ModelConfig& c, std::size_t count, std::size_t length, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Sample> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(random_sample(c, length, rng));
  return out;
}

Batch batch_of(const std::vector<Sample>& samples, std::size_t seed) {
  std::vector<const Sample*> ptrs;
  for (const auto& s : samples) ptrs.push_back(&s);
  return make_batch(ptrs, seed);
}

// --------------------------------------------------------------------------
// Encoders

TEST(EncodeModality, OutputWidthIsHidden) {
  ModelConfig c;  // full-size defaults
  ReprGesture model(c, 1);
  Rng rng(2);
  for (std::size_t t : {1u, 5u}) {
    Graph g;
    const BatchLayout layout{1, t};
    EXPECT_EQ(model.encode_modality(g, g.constant(random_normal({t, 300}, rng)), Modality::kText, layout).cols(), 48u);
    EXPECT_EQ(model.encode_modality(g, g.constant(random_normal({t, 80}, rng)), Modality::kAudio, layout).cols(), 48u);
    Var u = model.encode_modality(g, g.constant(random_normal({t, 216}, rng)), Modality::kGesture, layout);
    EXPECT_EQ(u.cols(), 48u);
    EXPECT_EQ(u.rows(), t);
  }
  Graph g;
  EXPECT_THROW(model.encode_modality(g, g.constant(Tensor(3, 299)), Modality::kText, {1, 3}), DimensionError);
}

TEST(EncodeModality, GradientCheck) {
  ReprGesture model(tiny_config(), 3);
  Rng rng(4);
  const Tensor x = random_normal({4, 6}, rng);
  const Tensor w = random_normal({4, 8}, rng);
  for (Modality m : {Modality::kText, Modality::kGesture}) {
    const Tensor in = m == Modality::kText ? x : random_normal({4, 12}, rng);
    auto f = [&](Graph& g) { return sum(mul(model.encode_modality(g, g.constant(in), m, {1, 4}), g.constant(w))); };
    EXPECT_LT(grad_check_params(f, model.params_with_prefix(modality_name(m) + "."), 1e-6), 1e-4);
  }
}

TEST(ProjectRepr, SharedEncoderIsShared) {
  ReprGesture model(tiny_config(), 5);
  Rng rng(6);
  const Tensor u = random_normal({3, 8}, rng);
  Graph g;
  const ReprPair t = model.project_repr(g, g.constant(u), Modality::kText);
  const ReprPair a = model.project_repr(g, g.constant(u), Modality::kAudio);
  EXPECT_EQ(t.shared.value(), a.shared.value());
  EXPECT_GT(max_abs_diff(t.specific.value(), a.specific.value()), 1e-6);
  const Tensor zero(3, 8);
  const ReprPair z0 = model.project_repr(g, g.constant(zero), Modality::kText);
  const ReprPair z2 = model.project_repr(g, g.constant(zero), Modality::kGesture);
  EXPECT_EQ(z0.shared.value(), z2.shared.value());
  EXPECT_THROW(modality_from_index(3), ConfigError);
  EXPECT_THROW(modality_from_index(-1), ConfigError);
  Graph g2;
  EXPECT_THROW(model.project_repr(g2, g2.constant(Tensor(3, 7)), Modality::kText), DimensionError);
}

TEST(ProjectRepr, ParameterIsolation) {
  ReprGesture model(tiny_config(), 7);
  Rng rng(8);
  const Tensor u = random_normal({3, 8}, rng);
  auto run = [&] {
    Graph g;
    std::array<ReprPair, 3> out;
    for (int m = 0; m < 3; ++m) {
      const ReprPair p = model.project_repr(g, g.constant(u), modality_from_index(m));
      out[static_cast<std::size_t>(m)] = p;
    }
    std::array<std::pair<Tensor, Tensor>, 3> vals;
    for (std::size_t m = 0; m < 3; ++m) vals[m] = {out[m].shared.value(), out[m].specific.value()};
    return vals;
  };
  const auto base = run();
  model.param("shared.w").value[0] += 0.5;
  const auto shared_moved = run();
  model.param("shared.w").value[0] -= 0.5;
  model.param("private.text.w").value[0] += 0.5;
  const auto text_moved = run();
  for (std::size_t m = 0; m < 3; ++m) {
    EXPECT_NE(shared_moved[m].first, base[m].first) << m;
    EXPECT_EQ(shared_moved[m].second, base[m].second) << m;
    EXPECT_EQ(text_moved[m].first, base[m].first) << m;
    if (m == 0) {
      EXPECT_NE(text_moved[m].second, base[m].second);
    } else {
      EXPECT_EQ(text_moved[m].second, base[m].second) << m;
    }
  }
}

TEST(ProjectRepr, GradientIsolationAcrossModalities) {
  ReprGesture model(tiny_config(), 9);
  Rng rng(10);
  const Tensor u = random_normal({3, 8}, rng);
  for (int only = 0; only < 3; ++only) {
    for (Parameter* p : model.all_params()) p->zero_grad();
    Graph g;
    const ReprPair r = model.project_repr(g, g.constant(u), modality_from_index(only));
    g.backward(add(sum(r.shared), sum(square(r.specific))));
    for (int m = 0; m < 3; ++m) {
      const Tensor& grad = model.param("private." + modality_name(modality_from_index(m)) + ".w").grad;
      const bool nonzero = max_abs_diff(grad, Tensor(grad.shape())) > 0.0;
      EXPECT_EQ(nonzero, m == only) << only << " " << m;
    }
    EXPECT_GT(max_abs_diff(model.param("shared.w").grad, Tensor(Shape{8, 8})), 0.0);
  }
}

// --------------------------------------------------------------------------
// Domain adversary

TEST(DomainLoss, UniformClassifierGivesThreeLnThree) {
  ReprGesture model(tiny_config(), 11);
  model.param("domain.l2.w").value.fill(0.0);
  model.param("domain.l2.b").value.fill(0.0);
  Rng rng(12);
  const Sample s = random_sample(tiny_config(), 5, rng);
  Graph g;
  const Encoded enc = model.encode(g, g.constant(s.text), g.constant(s.audio), g.constant(s.gesture), {1, 5});
  EXPECT_NEAR(g.item(model.domain_loss(g, enc)), 3.0 * std::log(3.0), 1e-12);
}

TEST(DomainLoss, PerfectClassificationApproachesZero) {
  Graph g;
  Tensor logits(4, 3, 0.0);
  for (std::size_t r = 0; r < 4; ++r) logits(r, 1) = 50.0;
  EXPECT_LT(g.item(cross_entropy_rows(g.constant(logits), 1)), 1e-20);
}

class GradReversalPaired : public ::testing::TestWithParam<AdversaryTarget> {};

TEST_P(GradReversalPaired, EncoderGradientsNegatedClassifierUnchanged) {
  ModelConfig c = tiny_config();
  c.adversary_target = GetParam();
  ReprGesture model(c, 13);
  Rng rng(14);
  const Sample s = random_sample(c, 4, rng);
  struct Run {
    std::map<std::string, Tensor> grads;
    std::array<Tensor, 3> input_grads;
  };
  auto run = [&](bool reverse) {
    for (Parameter* p : model.all_params()) p->zero_grad();
    Graph g;
    Encoded enc;
    const Tensor inputs[] = {s.text, s.audio, s.gesture};
    for (int m = 0; m < 3; ++m) {
      const Modality mod = modality_from_index(m);
      enc.u[static_cast<std::size_t>(m)] =
          g.variable(model.encode_modality(g, g.constant(inputs[m]), mod, {1, 4}).value());
      enc.repr[static_cast<std::size_t>(m)] = model.project_repr(g, enc.u[static_cast<std::size_t>(m)], mod);
    }
    g.backward(model.domain_loss(g, enc, reverse));
    Run r;
    for (Parameter* p : model.all_params()) r.grads[p->name] = p->grad;
    for (std::size_t m = 0; m < 3; ++m) r.input_grads[m] = g.grad(enc.u[m]);
    return r;
  };
  const Run with = run(true), without = run(false);
  std::size_t encoder_checked = 0;
  for (const auto& [name, grad] : with.grads) {
    const Tensor& other = without.grads.at(name);
    if (name.rfind("domain.", 0) == 0) {
      EXPECT_EQ(grad, other) << name;
    } else {
      Tensor neg = other;
      for (double& v : neg.values()) v = -v;
      EXPECT_EQ(grad, neg) << name;
      if (name.rfind("shared", 0) == 0 || name.rfind("private", 0) == 0) {
        encoder_checked += max_abs_diff(grad, Tensor(grad.shape())) > 0.0;
      }
    }
  }
  EXPECT_GE(encoder_checked, 2u);
  for (std::size_t m = 0; m < 3; ++m) {
    Tensor neg = without.input_grads[m];
    for (double& v : neg.values()) v = -v;
    EXPECT_EQ(with.input_grads[m], neg);
    EXPECT_GT(max_abs_diff(neg, Tensor(neg.shape())), 0.0);
  }
}

INSTANTIATE_TEST_SUITE_P(BothTargets, GradReversalPaired,
                         ::testing::Values(AdversaryTarget::kShared, AdversaryTarget::kSpecific));

// --------------------------------------------------------------------------
// Reconstruction and gesture losses

TEST(ReconLoss, Arithmetic) {
  Graph g;
  Rng rng(15);
  std::array<Var, 3> u, same, ones, twos;
  for (std::size_t m = 0; m < 3; ++m) {
    const Tensor x = random_normal({5, 48}, rng);
    Tensor x1 = x, x2 = x;
    for (double& v : x1.values()) v -= 1.0;
    for (double& v : x2.values()) v -= 2.0;
    u[m] = g.constant(x);
    same[m] = g.constant(x);
    ones[m] = g.constant(x1);
    twos[m] = g.constant(x2);
  }
  EXPECT_EQ(g.item(recon_loss_of(u, same)), 0.0);
  EXPECT_EQ(g.item(recon_loss_of(u, ones)), 1.0);
  EXPECT_EQ(g.item(recon_loss_of(u, twos)), 4.0);
}

TEST(GestureLoss, HandEvaluations) {
  Graph g;
  const LossWeights w;
  const Tensor target(90, 216, 0.3);
  Tensor half = target, two = target;
  for (double& v : half.values()) v += 0.5;
  for (double& v : two.values()) v -= 2.0;
  EXPECT_EQ(g.item(gesture_loss(g.constant(target), g.constant(target), w)), 0.0);
  EXPECT_NEAR(g.item(gesture_loss(g.constant(target), g.constant(half), w)), 50.0, 1e-9);
  EXPECT_NEAR(g.item(gesture_loss(g.constant(target), g.constant(two), w)), 650.0, 1e-9);
  EXPECT_THROW(gesture_loss(g.constant(target), g.constant(Tensor(90, 215)), w), DimensionError);
}

TEST(GanLoss, FixedPoints) {
  Graph g;
  const Var half = g.constant(Tensor(10, 1, 0.5));
  EXPECT_NEAR(g.item(discriminator_loss(half, half)), 2.0 * std::numbers::ln2, 1e-12);
  const Var one = g.constant(Tensor(10, 1, 1.0)), zero = g.constant(Tensor(10, 1, 0.0));
  EXPECT_LT(g.item(discriminator_loss(one, zero)), 1e-6);
  const double clamped = g.item(discriminator_loss(zero, zero));
  EXPECT_TRUE(std::isfinite(clamped));
  EXPECT_LE(clamped, -std::log(1e-7) + 1e-6);
  EXPECT_NEAR(g.item(generator_adversarial_loss(half)), std::numbers::ln2, 1e-12);
}

// --------------------------------------------------------------------------
// Generator and discriminator

TEST(Generator, ShapesAndSingleFrame) {
  ModelConfig c;
  ReprGesture model(c, 16);
  Rng rng(17);
  for (std::size_t t : {1u, 7u}) {
    const Sample s = random_sample(c, t, rng);
    Graph g;
    const Encoded enc = model.encode(g, g.constant(s.text), g.constant(s.audio), g.constant(s.gesture), {1, t});
    const Var out = model.generate(g, enc, g.constant(s.rhythm), {1, t});
    EXPECT_EQ(out.rows(), t);
    EXPECT_EQ(out.cols(), 216u);
  }
  const Sample s = random_sample(c, 4, rng);
  Graph g;
  const Encoded enc = model.encode(g, g.constant(s.text), g.constant(s.audio), g.constant(s.gesture), {1, 4});
  EXPECT_THROW(model.generate(g, enc, g.constant(Tensor(3, 3)), {1, 4}), DimensionError);
}

TEST(Generator, GradientCheckTiny) {
  ModelConfig c = tiny_config();
  c.gen_width = 16;
  c.gen_heads = 4;
  ReprGesture model(c, 18);
  Rng rng(19);
  const Sample s = random_sample(c, 3, rng);
  const Tensor w = random_normal({3, 12}, rng);
  auto f = [&](Graph& g) {
    const Encoded enc = model.encode(g, g.constant(s.text), g.constant(s.audio), g.constant(s.gesture), {1, 3});
    return sum(mul(model.generate(g, enc, g.constant(s.rhythm), {1, 3}), g.constant(w)));
  };
  EXPECT_LT(grad_check_params(f, model.params_with_prefix("gen."), 1e-6), 1e-3);
}

TEST(Generator, BatchRowsMatchSeparateWindows) {
  ModelConfig c = tiny_config();
  ReprGesture model(c, 20);
  const auto samples = random_samples(c, 3, 5, 21);
  const Batch b = batch_of(samples, 2);
  Graph g;
  const Encoded enc = model.encode(g, g.constant(b.text), g.constant(b.audio), g.constant(b.gesture_input), b.layout);
  const Tensor together = model.generate(g, enc, g.constant(b.rhythm), b.layout).value();
  for (std::size_t i = 0; i < 3; ++i) {
    const Tensor alone = generate_window(model, samples[i].text, samples[i].audio, samples[i].rhythm,
                                         samples[i].gesture.slice_rows(0, 2), 5);
    EXPECT_LE(max_abs_diff(alone, together.slice_rows(i * 5, 5)), 1e-12);
  }
}

TEST(Discriminator, RangeShapeAndBatching) {
  ModelConfig c;
  ReprGesture model(c, 22);
  Rng rng(23);
  const Tensor x = random_normal({12, 216}, rng);
  Graph g;
  const Tensor both = model.discriminate(g, g.constant(x), {2, 6}).value();
  EXPECT_EQ(both.rows(), 12u);
  EXPECT_EQ(both.cols(), 1u);
  for (double p : both.values()) {
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
  }
  for (std::size_t w = 0; w < 2; ++w) {
    const Tensor one = model.discriminate(g, g.constant(x.slice_rows(w * 6, 6)), {1, 6}).value();
    EXPECT_LE(max_abs_diff(one, both.slice_rows(w * 6, 6)), 1e-12);
  }
  Tensor reversed(6, 216);
  for (std::size_t t = 0; t < 6; ++t)
    for (std::size_t k = 0; k < 216; ++k) reversed(t, k) = x(5 - t, k);
  EXPECT_EQ(model.discriminate(g, g.constant(reversed), {1, 6}).rows(), 6u);
}

TEST(Discriminator, GradientCheckToy) {
  ReprGesture model(tiny_config(), 24);
  Rng rng(25);
  const Tensor x = random_normal({8, 12}, rng);
  auto f = [&](Graph& g) { return sum(model.discriminate(g, g.constant(x), {2, 4})); };
  EXPECT_LT(grad_check_params(f, model.discriminator_params(), 1e-6), 1e-3);
  auto fx = [&](Graph& g, Var in) { return sum(model.discriminate(g, in, {2, 4})); };
  EXPECT_LT(grad_check(fx, x, 1e-6), 1e-3);
}

// --------------------------------------------------------------------------
// Full objective

TEST(FullModel, GradientCheckMiniature) {
  ModelConfig c = tiny_config();
  ReprGesture model(c, 26);
  // Zero-initialised biases put leaky units fed by all-zero rows exactly on
  // the kink, where central differences are meaningless.
  Rng jitter(99);
  for (Parameter* p : model.all_params())
    if (p->name.ends_with(".b"))
      for (double& v : p->value.values()) v += 0.1 * jitter.normal();
  const auto samples = random_samples(c, 2, 4, 27);
  const Batch b = batch_of(samples, 1);
  TrainConfig tc;
  auto f = [&](Graph& g) { return build_losses(g, model, b, tc, tc.weights.gamma, true).total; };
  EXPECT_LT(grad_check_params(f, model.all_params(), 1e-6, 600, 3), 1e-3);
}

TEST(Trainer, WarmupSchedule) {
  ReprGesture model(tiny_config(), 28);
  Trainer tr(model, TrainConfig{});
  for (std::size_t e = 0; e < 10; ++e) EXPECT_EQ(tr.gamma_for(e), 0.0);
  EXPECT_EQ(tr.gamma_for(10), 5.0);
  EXPECT_EQ(tr.gamma_for(99), 5.0);
  TrainConfig no_gan;
  no_gan.use_gan = false;
  Trainer tr2(model, no_gan);
  EXPECT_EQ(tr2.gamma_for(50), 0.0);
}

TrainConfig short_run(std::size_t epochs) {
  TrainConfig tc;
  tc.epochs = epochs;
  tc.warmup_epochs = 2;
  tc.batch_size = 2;
  tc.seed_frames = 2;
  tc.seed = 31;
  return tc;
}

TEST(Trainer, TotalIdentityAndDeterminism) {
  const ModelConfig c = tiny_config();
  const auto samples = random_samples(c, 5, 6, 29);
  auto run = [&] {
    ReprGesture model(c, 30);
    Trainer tr(model, short_run(5));
    return tr.fit(samples);
  };
  const auto a = run(), b = run();
  ASSERT_EQ(a.size(), 5u);
  const LossWeights w;
  for (std::size_t e = 0; e < a.size(); ++e) {
    EXPECT_EQ(a[e].total, a[e].gesture + a[e].gamma * a[e].gan + w.delta * a[e].domain + w.epsilon * a[e].recon);
    EXPECT_EQ(a[e].gamma, e < 2 ? 0.0 : 5.0);
    EXPECT_GT(a[e].gan, 0.0);
    EXPECT_EQ(a[e].total, b[e].total);
    EXPECT_EQ(a[e].disc, b[e].disc);
    EXPECT_EQ(e < 2, a[e].disc == 0.0);
  }
}

TEST(Trainer, StepTotalMatchesGraph) {
  const ModelConfig c = tiny_config();
  ReprGesture model(c, 32);
  const auto samples = random_samples(c, 2, 6, 33);
  const Batch b = batch_of(samples, 2);
  TrainConfig tc = short_run(1);
  Graph g;
  const LossGraph lg = build_losses(g, model, b, tc, 5.0, true);
  LossBreakdown l;
  l.gesture = g.item(lg.gesture);
  l.gan = g.item(lg.gan);
  l.domain = g.item(lg.domain);
  l.recon = g.item(lg.recon);
  l.gamma = 5.0;
  EXPECT_EQ(g.item(lg.total), weighted_total(l, tc.weights));
}

struct AblationCase {
  const char* name;
  bool gan, recon, domain, repr;
};

class Ablation : public ::testing::TestWithParam<AblationCase> {};

TEST_P(Ablation, DisabledComponentIsZero) {
  const AblationCase a = GetParam();
  ModelConfig c = tiny_config();
  c.use_repr = a.repr;
  ReprGesture model(c, 34);
  TrainConfig tc = short_run(4);
  tc.use_gan = a.gan;
  tc.use_recon = a.recon;
  tc.use_domain = a.domain;
  Trainer tr(model, tc);
  const auto log = tr.fit(random_samples(c, 4, 6, 35));
  for (const auto& l : log) {
    EXPECT_TRUE(std::isfinite(l.gesture));
    EXPECT_EQ(l.repr, a.repr);
    if (!a.repr) {
      EXPECT_EQ(l.total, l.gesture);
      continue;
    }
    EXPECT_EQ(l.gan == 0.0, !a.gan);
    EXPECT_EQ(l.recon == 0.0, !a.recon);
    EXPECT_EQ(l.domain == 0.0, !a.domain);
  }
  if (!a.repr) {
    EXPECT_THROW(model.param("shared.w"), ConfigError);
    EXPECT_TRUE(model.discriminator_params().empty());
    Checkpoint ck;
    model.save(ck);
    EXPECT_TRUE(ck.names("model/disc.").empty());
    EXPECT_TRUE(ck.names("model/decoder.").empty());
  }
}

INSTANTIATE_TEST_SUITE_P(Flags, Ablation,
                         ::testing::Values(AblationCase{"no_gan", false, true, true, true},
                                           AblationCase{"no_recon", true, false, true, true},
                                           AblationCase{"no_domain", true, true, false, true},
                                           AblationCase{"no_repr", true, true, true, false}),
                         [](const auto& info) { return std::string(info.param.name); });

TEST(Trainer, NonFiniteLossNamesComponent) {
  const ModelConfig c = tiny_config();
  ReprGesture model(c, 36);
  TrainConfig tc = short_run(1);
  tc.weights.alpha = 1e308;
  tc.weights.beta = 1e308;
  Trainer tr(model, tc);
  try {
    tr.fit(random_samples(c, 2, 6, 37));
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("l_gesture"), std::string::npos) << e.what();
  }
}

TEST(TrainLog, RoundTripWithNa) {
  LossBreakdown a{0, 1.5, 0.7, 3.2, 0.1, 1.85, 0.0, 1.3, true};
  LossBreakdown b{1, 2.5, 0.0, 0.0, 0.0, 2.5, 0.0, 0.0, false};
  const LossBreakdown rows[] = {a, b};
  const auto path = std::filesystem::temp_directory_path() / "cosg_train_log.csv";
  write_train_log(path, rows);
  const auto back = read_train_log(path);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].domain, 3.2);
  EXPECT_TRUE(back[0].repr);
  EXPECT_FALSE(back[1].repr);
  EXPECT_EQ(back[1].total, 2.5);
  std::filesystem::remove(path);
}

// --------------------------------------------------------------------------
// Checkpoint and long synthesis

TEST(ModelCheckpoint, RoundTripReproducesOutputs) {
  const ModelConfig c = tiny_config();
  ReprGesture a(c, 38), b(c, 39);
  Checkpoint ck;
  a.save(ck);
  b.load(ck);
  Rng rng(40);
  const Sample s = random_sample(c, 6, rng);
  EXPECT_EQ(generate_window(a, s.text, s.audio, s.rhythm, Tensor(), 6),
            generate_window(b, s.text, s.audio, s.rhythm, Tensor(), 6));
  ModelConfig wider = c;
  wider.hidden = 9;
  ReprGesture other(wider, 1);
  EXPECT_THROW(other.load(ck), DataError);
}

TEST(SynthesizeLong, SingleChunk) {
  const ModelConfig c = tiny_config();
  ReprGesture model(c, 41);
  Rng rng(42);
  const Sample s = random_sample(c, 100, rng);
  const Tensor out = synthesize_long(model, s.text, s.audio, s.rhythm, std::nullopt);
  EXPECT_EQ(out.rows(), 100u);
  EXPECT_EQ(out.cols(), 12u);
  EXPECT_EQ(out.slice_rows(0, 10), Tensor(10, 12));
  const Tensor direct = generate_window(model, s.text, s.audio, s.rhythm, Tensor(10, 12), 100);
  EXPECT_EQ(out.slice_rows(10, 90), direct.slice_rows(10, 90));
  EXPECT_THROW(synthesize_long(model, s.text.slice_rows(0, 99), s.audio.slice_rows(0, 99),
                               s.rhythm.slice_rows(0, 99), std::nullopt),
               DataError);
}

TEST(SynthesizeLong, ChainsSeedsAcrossChunks) {
  const ModelConfig c = tiny_config();
  ReprGesture model(c, 43);
  Rng rng(44);
  const Sample s = random_sample(c, 190, rng);
  const Tensor seed = random_normal({10, 12}, rng);
  const Tensor out = synthesize_long(model, s.text, s.audio, s.rhythm, seed);
  ASSERT_EQ(out.rows(), 190u);
  EXPECT_EQ(out.slice_rows(0, 10), seed);
  const Tensor first = generate_window(model, s.text.slice_rows(0, 100), s.audio.slice_rows(0, 100),
                                       s.rhythm.slice_rows(0, 100), seed, 100);
  // Generated frames of chunk 1 are stitched rows 10..99; its generated
  // frames 80..89 (rows 90..99) seed chunk 2.
  EXPECT_EQ(out.slice_rows(10, 90), first.slice_rows(10, 90));
  const Tensor chunk2_seed = first.slice_rows(90, 10);
  const Tensor second = generate_window(model, s.text.slice_rows(90, 100), s.audio.slice_rows(90, 100),
                                        s.rhythm.slice_rows(90, 100), chunk2_seed, 100);
  // The first generated frame of chunk 2 follows chunk 1's 90 generated frames.
  EXPECT_EQ(out.slice_rows(100, 1), second.slice_rows(10, 1));
  EXPECT_EQ(out.slice_rows(100, 90), second.slice_rows(10, 90));
}

TEST(SynthesizeLong, PadsTheFinalChunk) {
  const ModelConfig c = tiny_config();
  ReprGesture model(c, 45);
  Rng rng(46);
  const Sample s = random_sample(c, 150, rng);
  const Tensor out = synthesize_long(model, s.text, s.audio, s.rhythm, std::nullopt);
  ASSERT_EQ(out.rows(), 150u);
  for (double v : out.values()) EXPECT_TRUE(std::isfinite(v));
  EXPECT_GT(max_abs_diff(out.slice_rows(140, 10), Tensor(10, 12)), 0.0);
}

}  // namespace
}  // namespace cosg
