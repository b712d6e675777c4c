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

#include "checks.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "config.hpp"
#include "cosg/dataset.hpp"
#include "cosg/errors.hpp"
#include "cosg/grad_check.hpp"
#include "cosg/metrics.hpp"
#include "cosg/random.hpp"
#include "cosg/synthetic.hpp"
#include "cosg/trainer.hpp"

namespace cosg::cli {
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Collects sub-check outcomes; the first failure becomes the detail line.
struct Tally {
  bool pass = true;
  std::vector<std::string> notes;
  std::string failure;

  void expect(bool ok, const std::string& what) {
    if (!ok && pass) failure = what;
    pass = pass && ok;
  }
  void note(std::string s) { notes.push_back(std::move(s)); }
  std::string detail() const {
    std::string out;
    for (const auto& n : notes) out += (out.empty() ? "" : "; ") + n;
    if (!pass) out = "FAILED: " + failure + (out.empty() ? "" : " | " + out);
    return out;
  }
};

ModelConfig miniature_model() {
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

std::vector<Sample> random_samples(const ModelConfig& c, std::size_t count, std::size_t length, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Sample> out;
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back({random_normal({length, c.word_dim}, rng), random_normal({length, c.mel_dim}, rng),
                   random_normal({length, c.rhythm_dim}, rng), random_normal({length, c.gesture_dim}, rng)});
  }
  return out;
}

Batch batch_of(const std::vector<Sample>& samples, std::size_t seed_frames) {
  std::vector<const Sample*> ptrs;
  for (const auto& s : samples) ptrs.push_back(&s);
  return make_batch(ptrs, seed_frames);
}

// ---------------------------------------------------------------------------
// 1. Gradients

CheckResult check_gradients() {
  CheckResult r{.id = 1, .title = "gradient correctness (primitives < 1e-4, miniature model < 1e-3, < 30 s)", .detail = {}};
  const auto t0 = Clock::now();
  Tally tally;
  Rng rng(2026);
  const Tensor x = random_normal({3, 4}, rng);
  const Tensor other = random_normal({3, 4}, rng);
  const Tensor mix = random_normal({3, 4}, rng);
  const Tensor w = random_normal({4, 5}, rng);
  const Tensor bias4 = random_normal({4}, rng);
  const Tensor taps = random_normal({3, 12}, rng);
  const std::vector<std::pair<const char*, ScalarFn>> cases = {
      {"add", [&](Graph& g, Var v) { return sum(mul(add(v, g.constant(other)), g.constant(mix))); }},
      {"sub", [&](Graph& g, Var v) { return sum(mul(sub(g.constant(other), v), g.constant(mix))); }},
      {"mul", [&](Graph& g, Var v) { return sum(mul(v, g.constant(other))); }},
      {"scale/add_scalar", [&](Graph& g, Var v) { return sum(mul(scale(add_scalar(v, 0.3), -1.7), g.constant(mix))); }},
      {"add_row", [&](Graph& g, Var v) { return sum(mul(add_row(v, g.constant(bias4)), g.constant(mix))); }},
      {"matmul", [&](Graph& g, Var v) { return sum(square(matmul(v, g.constant(w)))); }},
      {"matmul_nt", [&](Graph& g, Var v) { return sum(square(matmul_nt(v, g.constant(other)))); }},
      {"transpose", [&](Graph& g, Var v) { return sum(mul(transpose(transpose(v)), g.constant(mix))); }},
      {"linear", [&](Graph& g, Var v) { return sum(square(linear(v, g.constant(w), g.constant(Tensor(Shape{5}, 0.2))))); }},
      {"leaky_relu", [&](Graph& g, Var v) { return sum(mul(leaky_relu(v, 0.2), g.constant(mix))); }},
      {"sigmoid", [&](Graph& g, Var v) { return sum(mul(sigmoid(v), g.constant(mix))); }},
      {"tanh", [&](Graph& g, Var v) { return sum(mul(tanh(v), g.constant(mix))); }},
      {"log", [&](Graph&, Var v) { return sum(log(add_scalar(square(v), 1.0))); }},
      {"huber", [&](Graph& g, Var v) { return sum(mul(huber(scale(v, 1.5)), g.constant(mix))); }},
      {"layer_norm", [&](Graph& g, Var v) { return sum(mul(layer_norm(v, g.constant(bias4), g.constant(bias4)), g.constant(mix))); }},
      {"softmax_rows", [&](Graph& g, Var v) { return sum(mul(softmax_rows(v), g.constant(mix))); }},
      {"cross_entropy_rows", [&](Graph&, Var v) { return cross_entropy_rows(v, 2); }},
      {"binary_cross_entropy", [&](Graph&, Var v) { return binary_cross_entropy(sigmoid(v), 1.0); }},
      {"mean", [&](Graph&, Var v) { return mean(square(v)); }},
      {"slice/concat", [&](Graph& g, Var v) {
         std::vector<Var> parts{slice_rows(v, 1, 2), slice_rows(v, 0, 1)};
         std::vector<Var> cols{slice_cols(v, 2, 2), slice_cols(v, 0, 2)};
         return add(sum(mul(concat_rows(parts), g.constant(mix))), sum(mul(concat_cols(cols), g.constant(other))));
       }},
      {"gather_rows", [&](Graph&, Var v) { return sum(square(gather_rows(v, {2, 0, 2, 1}))); }},
      {"unfold_time", [&](Graph& g, Var v) { return sum(mul(unfold_time(v, 3, 3), g.constant(taps))); }},
      {"grad_reverse", [&](Graph& g, Var v) { return sum(mul(square(grad_reverse(v)), g.constant(mix))); }},
  };
  double worst = 0.0;
  std::string worst_name;
  for (const auto& [name, f] : cases) {
    const double err = grad_check(f, x, 1e-5);
    if (err > worst) {
      worst = err;
      worst_name = name;
    }
    tally.expect(err < 1e-4, fmt::format("{} relative error {:.2e}", name, err));
  }
  {
    const Tensor xp = random_normal({8, 9}, rng), wh = random_normal({3, 9}, rng), bh = random_normal({9}, rng);
    const Tensor gmix = random_normal({8, 3}, rng);
    for (bool rev : {false, true}) {
      auto loss = [&](Graph& g, Var a, Var b, Var c) { return sum(mul(gru_sequence(a, b, c, 2, rev), g.constant(gmix))); };
      const std::pair<const char*, double> parts[] = {
          {"gru_sequence/x", grad_check([&](Graph& g, Var v) { return loss(g, v, g.constant(wh), g.constant(bh)); }, xp, 1e-5)},
          {"gru_sequence/w", grad_check([&](Graph& g, Var v) { return loss(g, g.constant(xp), v, g.constant(bh)); }, wh, 1e-5)},
          {"gru_sequence/b", grad_check([&](Graph& g, Var v) { return loss(g, g.constant(xp), g.constant(wh), v); }, bh, 1e-5)},
      };
      for (const auto& [name, err] : parts) {
        if (err > worst) {
          worst = err;
          worst_name = name;
        }
        tally.expect(err < 1e-4, fmt::format("{} ({}) relative error {:.2e}", name, rev ? "reverse" : "forward", err));
      }
    }
  }
  tally.note(fmt::format("{} primitives, worst {:.2e} ({})", cases.size() + 1, worst, worst_name));

  ModelConfig mc = miniature_model();
  ReprGesture model(mc, 26);
  Rng jitter(99);
  for (Parameter* p : model.all_params())
    if (p->name.ends_with(".b"))
      for (double& v : p->value.values()) v += 0.1 * jitter.normal();
  const auto samples = random_samples(mc, 2, 4, 27);
  const Batch b = batch_of(samples, 1);
  TrainConfig tc;
  const double full = grad_check_params(
      [&](Graph& g) { return build_losses(g, model, b, tc, tc.weights.gamma, true).total; }, model.all_params(), 1e-6,
      600, 3);
  tally.expect(full < 1e-3, fmt::format("miniature model relative error {:.2e}", full));
  tally.note(fmt::format("miniature model (T=4, d_h=8) {:.2e}", full));
  r.seconds = since(t0);
  tally.expect(r.seconds < 30.0, fmt::format("took {:.1f} s", r.seconds));
  r.pass = tally.pass;
  r.detail = tally.detail();
  return r;
}

// ---------------------------------------------------------------------------
// 2. Gradient reversal

CheckResult check_grad_reversal() {
  CheckResult r{.id = 2, .title = "gradient reversal: encoder gradients negated, classifier unchanged (bitwise)", .detail = {}};
  const auto t0 = Clock::now();
  Tally tally;
  for (AdversaryTarget target : {AdversaryTarget::kShared, AdversaryTarget::kSpecific}) {
    const char* label = target == AdversaryTarget::kShared ? "shared" : "specific";
    ModelConfig mc = miniature_model();
    mc.adversary_target = target;
    ReprGesture model(mc, 13);
    const Sample s = random_samples(mc, 1, 5, 14).front();
    auto run = [&](bool reverse) {
      for (Parameter* p : model.all_params()) p->zero_grad();
      Graph g;
      const Encoded enc = model.encode(g, g.constant(s.text), g.constant(s.audio), g.constant(s.gesture), {1, 5});
      g.backward(model.domain_loss(g, enc, reverse));
      std::map<std::string, Tensor> grads;
      for (Parameter* p : model.all_params()) grads[p->name] = p->grad;
      return grads;
    };
    const auto with = run(true), without = run(false);
    std::size_t negated = 0, unchanged = 0;
    for (const auto& [name, grad] : with) {
      const Tensor& plain = without.at(name);
      if (name.rfind("domain.", 0) == 0) {
        tally.expect(grad == plain, fmt::format("[{}] classifier gradient {} changed", label, name));
        ++unchanged;
      } else {
        Tensor neg = plain;
        for (double& v : neg.values()) v = -v;
        tally.expect(grad == neg, fmt::format("[{}] encoder gradient {} not exactly negated", label, name));
        negated += max_abs_diff(grad, Tensor(grad.shape())) > 0.0;
      }
    }
    tally.expect(negated > 0, fmt::format("[{}] no encoder gradient reached", label));
    tally.note(fmt::format("{}: {} encoder tensors negated, {} classifier tensors identical", label, negated, unchanged));
  }
  r.seconds = since(t0);
  r.pass = tally.pass;
  r.detail = tally.detail();
  return r;
}

// ---------------------------------------------------------------------------
// 3. Loss arithmetic

CheckResult check_loss_arithmetic() {
  CheckResult r{.id = 3, .title = "loss arithmetic (recon = 1, gesture 50/650, 2 ln 2, total identity with warm-up)", .detail = {}};
  const auto t0 = Clock::now();
  Tally tally;
  Graph g;
  {
    Rng rng(3);
    std::array<Var, 3> u, shifted;
    for (std::size_t m = 0; m < 3; ++m) {
      const Tensor a = random_normal({7, 48}, rng);
      Tensor b = a;
      for (double& v : b.values()) v -= 1.0;
      u[m] = g.constant(a);
      shifted[m] = g.constant(b);
    }
    const double recon = g.item(recon_loss_of(u, shifted));
    tally.expect(recon == 1.0, fmt::format("l_recon = {:.17g}", recon));
    tally.note(fmt::format("l_recon = {}", recon));
  }
  {
    const LossWeights w;
    const Tensor target(90, 216, -0.25);
    Tensor half = target, two = target;
    for (double& v : half.values()) v += 0.5;
    for (double& v : two.values()) v += 2.0;
    const double l_half = g.item(gesture_loss(g.constant(target), g.constant(half), w));
    const double l_two = g.item(gesture_loss(g.constant(target), g.constant(two), w));
    tally.expect(std::abs(l_half - 50.0) <= 1e-9, fmt::format("residual 0.5 gives {:.12f}", l_half));
    tally.expect(std::abs(l_two - 650.0) <= 1e-9, fmt::format("residual 2 gives {:.12f}", l_two));
    tally.note(fmt::format("l_gesture = {:.9f} / {:.9f}", l_half, l_two));
  }
  {
    const Var half = g.constant(Tensor(16, 1, 0.5));
    const double d = g.item(discriminator_loss(half, half));
    tally.expect(std::abs(d - 2.0 * std::numbers::ln2) <= 1e-12, fmt::format("l_D(0.5) = {:.15f}", d));
    tally.note(fmt::format("l_D(0.5) - 2 ln 2 = {:.1e}", d - 2.0 * std::numbers::ln2));
  }
  {
    const ModelConfig mc = miniature_model();
    ReprGesture model(mc, 30);
    TrainConfig tc;
    tc.epochs = 12;
    tc.batch_size = 2;
    tc.seed_frames = 2;
    const auto samples = random_samples(mc, 4, 6, 29);
    Trainer trainer(model, tc);
    std::size_t steps = 0;
    for (std::size_t e = 0; e < tc.epochs; ++e) {
      for (std::size_t begin = 0; begin < samples.size(); begin += tc.batch_size) {
        const Batch b = batch_of({samples[begin], samples[begin + 1]}, tc.seed_frames);
        const LossBreakdown l = trainer.step(b, e);
        const double expected_gamma = e < 10 ? 0.0 : 5.0;
        const double identity = l.gesture + l.gamma * l.gan + tc.weights.delta * l.domain + tc.weights.epsilon * l.recon;
        tally.expect(l.gamma == expected_gamma, fmt::format("epoch {} logged gamma {}", e, l.gamma));
        tally.expect(l.total == identity, fmt::format("epoch {} total {:.17g} vs {:.17g}", e, l.total, identity));
        ++steps;
      }
    }
    tally.note(fmt::format("identity exact over {} steps (gamma 0 for epochs 0-9)", steps));
  }
  r.seconds = since(t0);
  r.pass = tally.pass;
  r.detail = tally.detail();
  return r;
}

// ---------------------------------------------------------------------------
// 4 and 5. Overfit run and representation probe

struct OverfitOutcome {
  std::vector<ClipStreams> clips;
  std::vector<Sample> samples;
  std::unique_ptr<ReprGesture> model;
  std::vector<LossBreakdown> log;
  double seconds = 0.0;
};

constexpr std::size_t kOverfitWindows = 8;
constexpr std::size_t kOverfitEpochs = 300;

OverfitOutcome overfit_run() {
  OverfitOutcome out;
  std::vector<std::string> vocab;
  for (std::size_t i = 0; i < 2 * kOverfitWindows; ++i) vocab.push_back(fmt::format("word{}", i));
  const WordVectors vectors = synthetic::word_vectors(vocab, kWordDim, 3);
  for (std::size_t c = 0; c < kOverfitWindows; ++c) {
    synthetic::MotionOptions mo;
    mo.frames = 100;
    mo.seed = 100 + c;
    mo.yaw_degrees = 20.0 * static_cast<double>(c);
    synthetic::SpeechOptions so;
    so.seconds = 100.0 / kFeatureFps;
    so.seed = 100 + c;
    so.base_pitch = 110.0 + 15.0 * static_cast<double>(c);
    const auto words = synthetic::transcript(so.seconds, vocab[2 * c], vocab[2 * c + 1]);
    out.clips.push_back(extract_streams(fmt::format("w{}", c), synthetic::motion(synthetic::skeleton(), mo),
                                        synthetic::speech(so), words, vectors, {}));
  }
  const StreamStats stats = fit_stream_stats(out.clips);
  std::vector<ClipStreams> normalized;
  for (const auto& c : out.clips) normalized.push_back(normalize_streams(c, stats));
  out.samples = training_samples(normalized, WindowSpec{});
  out.model = std::make_unique<ReprGesture>(ModelConfig{}, 42);
  TrainConfig tc;
  tc.epochs = kOverfitEpochs;
  tc.batch_size = 1;
  tc.seed = 7;
  const auto t0 = Clock::now();
  Trainer trainer(*out.model, tc);
  out.log = trainer.fit(out.samples);
  out.seconds = since(t0);
  return out;
}

CheckResult check_overfit(const OverfitOutcome& run) {
  CheckResult r{.id = 4, .title = "overfit smoke test (l_gesture <= 10%, l_recon <= 50% of epoch 0, < 5 min)", .detail = {}};
  Tally tally;
  const LossBreakdown& first = run.log.front();
  const LossBreakdown& last = run.log.back();
  const double g_ratio = last.gesture / first.gesture, r_ratio = last.recon / first.recon;
  tally.expect(run.samples.size() == kOverfitWindows, fmt::format("{} windows", run.samples.size()));
  tally.expect(run.log.size() == kOverfitEpochs, fmt::format("{} epochs logged", run.log.size()));
  tally.expect(g_ratio <= 0.10, fmt::format("l_gesture ratio {:.3f}", g_ratio));
  tally.expect(r_ratio <= 0.50, fmt::format("l_recon ratio {:.3f}", r_ratio));
  tally.expect(run.seconds < 300.0, fmt::format("took {:.0f} s", run.seconds));
  tally.note(fmt::format("l_gesture {:.3f} -> {:.3f} ({:.1f}%)", first.gesture, last.gesture, 100.0 * g_ratio));
  tally.note(fmt::format("l_recon {:.4f} -> {:.4f} ({:.1f}%)", first.recon, last.recon, 100.0 * r_ratio));
  r.seconds = run.seconds;
  r.pass = tally.pass;
  r.detail = tally.detail();
  return r;
}

CheckResult check_probe(const OverfitOutcome& run) {
  CheckResult r{.id = 5, .title = "adversary probe (h^c accuracy <= 45%, h^p accuracy >= 80%)", .detail = {}};
  const auto t0 = Clock::now();
  Tally tally;
  // Frozen representations of every overfit window; the probe is fitted on
  // even frames and scored on odd frames.
  std::vector<const Sample*> members;
  for (const auto& s : run.samples) members.push_back(&s);
  const Batch b = make_batch(members, TrainConfig{}.seed_frames);
  Graph g;
  const Encoded enc =
      run.model->encode(g, g.constant(b.text), g.constant(b.audio), g.constant(b.gesture_input), b.layout);
  std::array<Tensor, kModalities> fit_c, eval_c, fit_p, eval_p;
  std::vector<std::size_t> even, odd;
  for (std::size_t row = 0; row < b.layout.rows(); ++row) (row % 2 ? odd : even).push_back(row);
  for (std::size_t m = 0; m < kModalities; ++m) {
    fit_c[m] = gather_rows(enc.repr[m].shared, even).value();
    eval_c[m] = gather_rows(enc.repr[m].shared, odd).value();
    fit_p[m] = gather_rows(enc.repr[m].specific, even).value();
    eval_p[m] = gather_rows(enc.repr[m].specific, odd).value();
  }
  const std::size_t hidden = ModelConfig{}.domain_hidden;
  const double acc_c = probe_accuracy(fit_c, eval_c, hidden, 300, 5);
  const double acc_p = probe_accuracy(fit_p, eval_p, hidden, 300, 5);
  tally.expect(acc_c <= 0.45, fmt::format("h^c probe accuracy {:.3f}", acc_c));
  tally.expect(acc_p >= 0.80, fmt::format("h^p probe accuracy {:.3f}", acc_p));
  tally.note(fmt::format("h^c {:.1f}%, h^p {:.1f}% (chance 33.3%)", 100.0 * acc_c, 100.0 * acc_p));
  r.seconds = since(t0);
  r.pass = tally.pass;
  r.detail = tally.detail();
  return r;
}

// ---------------------------------------------------------------------------
// 6 and 7. Metrics

std::vector<MotionSample> reference_motion() {
  const Skeleton skel = synthetic::skeleton();
  std::vector<MotionSample> out;
  for (std::size_t i = 0; i < 4; ++i) {
    synthetic::MotionOptions opts;
    opts.frames = 240;
    opts.seed = 500 + i;
    opts.yaw_degrees = 45.0 * static_cast<double>(i);
    out.push_back(motion_sample(fmt::format("ref{}", i), synthetic::motion(skel, opts)));
  }
  return out;
}

CheckResult check_metric_fixed_points() {
  CheckResult r{.id = 6, .title = "metric fixed points on self-comparison (CCA 1, per-sequence 1.00 +/- 0.00, Hellinger 0, FGD 0)", .detail = {}};
  const auto t0 = Clock::now();
  Tally tally;
  const auto ref = reference_motion();
  const MetricsReport rep = evaluate_motion("GT", ref, ref, {}, nullptr);
  tally.expect(std::abs(rep.global_cca - 1.0) <= 1e-6, fmt::format("global CCA {:.9f}", rep.global_cca));
  tally.expect(std::abs(rep.cca_per_seq.mean - 1.0) <= 1e-6 && rep.cca_per_seq.std <= 1e-6,
               fmt::format("CCA per sequence {:.9f} +/- {:.2e}", rep.cca_per_seq.mean, rep.cca_per_seq.std));
  tally.expect(rep.hellinger_avg <= 1e-6, fmt::format("Hellinger {:.2e}", rep.hellinger_avg));
  tally.expect(rep.fgd_raw <= 1e-6, fmt::format("FGD raw {:.2e}", rep.fgd_raw));
  tally.note(fmt::format("CCA {:.9f}, per-seq {:.9f} +/- {:.1e}, Hellinger {:.1e}, FGD raw {:.1e}", rep.global_cca,
                         rep.cca_per_seq.mean, rep.cca_per_seq.std, rep.hellinger_avg, rep.fgd_raw));
  r.seconds = since(t0);
  r.pass = tally.pass;
  r.detail = tally.detail();
  return r;
}

CheckResult check_metric_oracles() {
  CheckResult r{.id = 7, .title = "metric oracles (FGD N(0,I4) vs N(e1,I4) = 1 +/- 0.05, Hellinger 0.5412, cubic jerk 6)", .detail = {}};
  Tally tally;
  auto timed = [&](const char* name, auto&& fn) {
    const auto t0 = Clock::now();
    const double v = fn();
    const double s = since(t0);
    tally.expect(s < 10.0, fmt::format("{} took {:.1f} s", name, s));
    r.seconds += s;
    return v;
  };
  const double f = timed("fgd", [] {
    Rng rng(20000);
    const Tensor a = random_normal({20000, 4}, rng);
    Tensor b = random_normal({20000, 4}, rng);
    for (std::size_t n = 0; n < b.rows(); ++n) b(n, 0) += 1.0;
    return fgd(a, b);
  });
  tally.expect(std::abs(f - 1.0) <= 0.05, fmt::format("FGD {:.4f}", f));
  const double h = timed("hellinger", [] {
    const double p[] = {1.0, 0.0}, q[] = {0.5, 0.5};
    return hellinger(p, q);
  });
  tally.expect(std::abs(h - 0.5412) <= 1e-4, fmt::format("Hellinger {:.6f}", h));
  const double j = timed("jerk", [] {
    const double fps = 30.0;
    Tensor p(60, 3);
    for (std::size_t t = 0; t < 60; ++t) p(t, 0) = std::pow(static_cast<double>(t) / fps, 3);
    return average_jerk(p, fps).mean;
  });
  tally.expect(std::abs(j - 6.0) <= 1e-6, fmt::format("jerk {:.9f}", j));
  tally.note(fmt::format("FGD {:.4f}, Hellinger {:.6f}, jerk {:.9f}", f, h, j));
  r.pass = tally.pass;
  r.detail = tally.detail();
  return r;
}

// ---------------------------------------------------------------------------
// 8. BVH fixtures

// Malformed fixtures carry the expected error line in their name:
// <anything>.line<N>.bvh.
std::size_t expected_line(const fs::path& p) {
  const std::string stem = p.stem().string();
  const auto pos = stem.rfind(".line");
  return pos == std::string::npos ? 0 : static_cast<std::size_t>(std::stoul(stem.substr(pos + 5)));
}

std::vector<fs::path> sorted_bvh(const fs::path& dir) {
  std::vector<fs::path> out;
  if (fs::is_directory(dir))
    for (const auto& e : fs::directory_iterator(dir))
      if (e.path().extension() == ".bvh") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

CheckResult check_bvh_fixtures(const fs::path& fixtures) {
  CheckResult r{.id = 8, .title = "BVH parse -> write -> parse within 1e-6; malformed fixtures report line numbers", .detail = {}};
  const auto t0 = Clock::now();
  Tally tally;
  const auto valid = sorted_bvh(fixtures / "valid");
  const auto malformed = sorted_bvh(fixtures / "malformed");
  tally.expect(!valid.empty() && !malformed.empty(), "fixture directories missing under " + fixtures.string());
  double worst = 0.0;
  for (const auto& p : valid) {
    try {
      const MotionClip a = load_bvh(p);
      const MotionClip b = parse_bvh_string(write_bvh_string(a));
      const double d = clip_distance(a, b);
      worst = std::max(worst, d);
      tally.expect(d <= 1e-6, fmt::format("{} round-trip difference {:.2e}", p.filename().string(), d));
    } catch (const std::exception& e) {
      tally.expect(false, fmt::format("{}: {}", p.filename().string(), e.what()));
    }
  }
  for (const auto& p : malformed) {
    const std::size_t want = expected_line(p);
    try {
      load_bvh(p);
      tally.expect(false, p.filename().string() + " parsed without error");
    } catch (const ParseError& e) {
      tally.expect(want == 0 || e.line() == want,
                   fmt::format("{} reported line {}, expected {}", p.filename().string(), e.line(), want));
    }
  }
  tally.note(fmt::format("{} valid (worst {:.1e}), {} malformed", valid.size(), worst, malformed.size()));
  r.seconds = since(t0);
  r.pass = tally.pass;
  r.detail = tally.detail();
  return r;
}

// ---------------------------------------------------------------------------
// 9. Ablation plumbing

CheckResult check_ablations(const fs::path& work) {
  CheckResult r{.id = 9, .title = "ablation flags zero their loss component in the training log", .detail = {}};
  const auto t0 = Clock::now();
  Tally tally;
  struct Case {
    const char* flag;
    const char* column;
  };
  const Case cases[] = {{"no_gan", "l_gan"}, {"no_recon", "l_recon"}, {"no_domain", "l_domain"}, {"no_repr", "repr"}};
  fs::create_directories(work);
  for (const Case& c : cases) {
    RunConfig cfg;
    cfg.model = miniature_model();
    cfg.data.word_dim = cfg.model.word_dim;
    cfg.train.epochs = 4;
    cfg.train.warmup_epochs = 1;
    cfg.train.batch_size = 2;
    cfg.train.seed_frames = 2;
    cfg.merge_string(fmt::format("[train]\n{} = true\n", c.flag));
    cfg.apply_ablations();
    ReprGesture model(cfg.model, 11);
    Trainer trainer(model, cfg.train);
    const auto log = trainer.fit(random_samples(cfg.model, 4, 6, 12));
    const fs::path path = work / fmt::format("log_{}.csv", c.flag);
    write_train_log(path, log);
    std::ifstream in(path);
    std::string header, line;
    std::getline(in, header);
    std::size_t rows = 0;
    while (std::getline(in, line)) {
      ++rows;
      std::vector<std::string> cells;
      std::stringstream ss(line);
      for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
      // epoch,l_gesture,l_gan,l_domain,l_recon,l_total,gamma_effective,l_disc
      if (cells.size() != 8) {
        tally.expect(false, fmt::format("{}: malformed log row '{}'", c.flag, line));
        continue;
      }
      const std::map<std::string, std::string> row = {{"l_gesture", cells[1]}, {"l_gan", cells[2]},
                                                      {"l_domain", cells[3]},   {"l_recon", cells[4]},
                                                      {"l_total", cells[5]},    {"gamma", cells[6]}};
      auto finite = [&](const std::string& key) {
        const std::string& v = row.at(key);
        return v != "NA" && std::isfinite(std::stod(v));
      };
      tally.expect(finite("l_gesture") && finite("l_total"), fmt::format("{}: non-finite core loss", c.flag));
      if (std::string(c.flag) == "no_repr") {
        for (const char* k : {"l_gan", "l_domain", "l_recon"})
          tally.expect(row.at(k) == "NA", fmt::format("no_repr: {} = {}", k, row.at(k)));
        continue;
      }
      for (const char* k : {"l_gan", "l_domain", "l_recon"}) {
        if (std::string(k) == c.column) {
          tally.expect(std::stod(row.at(k)) == 0.0, fmt::format("{}: {} = {}", c.flag, k, row.at(k)));
        } else {
          tally.expect(finite(k) && std::stod(row.at(k)) > 0.0, fmt::format("{}: {} = {}", c.flag, k, row.at(k)));
        }
      }
      if (std::string(c.flag) == "no_gan") {
        tally.expect(std::stod(row.at("gamma")) == 0.0, "no_gan: gamma_effective != 0");
      }
    }
    tally.expect(rows == 4, fmt::format("{}: {} log rows", c.flag, rows));
  }
  tally.note("no_gan, no_recon, no_domain, no_repr");
  r.seconds = since(t0);
  r.pass = tally.pass;
  r.detail = tally.detail();
  return r;
}

// ---------------------------------------------------------------------------
// 10. End-to-end determinism

int run_cli(const fs::path& cli, const std::string& args, const fs::path& log) {
  const std::string cmd = fmt::format("\"{}\" {} >\"{}\" 2>&1", cli.string(), args, log.string());
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

CheckResult check_end_to_end(const fs::path& cli, const fs::path& work) {
  CheckResult r{.id = 10, .title = "prepare -> train (5 epochs) -> generate twice gives byte-identical BVH (< 3 min)", .detail = {}};
  const auto t0 = Clock::now();
  Tally tally;
  fs::remove_all(work);
  fs::create_directories(work);
  synthetic::write_dataset(work / "data", {});
  {
    std::ofstream cfg(work / "train.ini");
    cfg << "[train]\nepochs = 5\nwarmup_epochs = 2\nbatch_size = 16\nseed = 11\n";
  }
  std::string bvh[2];
  for (int attempt = 0; attempt < 2; ++attempt) {
    const fs::path dir = work / fmt::format("attempt{}", attempt);
    fs::create_directories(dir);
    const std::vector<std::pair<const char*, std::string>> steps = {
        {"prepare", fmt::format("prepare --manifest \"{}\" --out \"{}\"", (work / "data/manifest.csv").string(),
                                (dir / "store").string())},
        {"train", fmt::format("train --store \"{}\" --config \"{}\" --out \"{}\"", (dir / "store").string(),
                              (work / "train.ini").string(), (dir / "run").string())},
        {"generate", fmt::format("generate --run \"{}\" --audio \"{}\" --transcript \"{}\" --out \"{}\"",
                                 (dir / "run").string(), (work / "data/audio/clip003.wav").string(),
                                 (work / "data/text/clip003.tsv").string(), (dir / "out.bvh").string())},
    };
    for (const auto& [name, args] : steps) {
      const int code = run_cli(cli, args, dir / fmt::format("{}.log", name));
      tally.expect(code == 0, fmt::format("attempt {} {} exited with {} (see {})", attempt, name, code,
                                          (dir / fmt::format("{}.log", name)).string()));
      if (code != 0) break;
    }
    std::ifstream in(dir / "out.bvh", std::ios::binary);
    bvh[attempt] = std::string((std::istreambuf_iterator<char>(in)), {});
  }
  tally.expect(!bvh[0].empty(), "no BVH produced");
  tally.expect(bvh[0] == bvh[1], "BVH outputs differ");
  r.seconds = since(t0);
  tally.expect(r.seconds < 180.0, fmt::format("took {:.0f} s", r.seconds));
  tally.note(fmt::format("{} bytes identical", bvh[0].size()));
  r.pass = tally.pass;
  r.detail = tally.detail();
  return r;
}

}  // namespace

std::vector<CheckResult> run_checks(const CheckOptions& options,
                                    const std::function<void(const CheckResult&)>& report) {
  auto wanted = [&](int id) {
    return options.only.empty() || std::find(options.only.begin(), options.only.end(), id) != options.only.end();
  };
  std::vector<CheckResult> results;
  auto emit = [&](CheckResult r) {
    report(r);
    results.push_back(std::move(r));
  };
  auto guarded = [&](int id, const char* title, auto&& fn) {
    if (!wanted(id)) return;
    try {
      emit(fn());
    } catch (const std::exception& e) {
      emit(CheckResult{id, title, false, std::string("FAILED: exception: ") + e.what(), 0.0});
    }
  };
  guarded(1, "gradient correctness", check_gradients);
  guarded(2, "gradient reversal", check_grad_reversal);
  guarded(3, "loss arithmetic", check_loss_arithmetic);
  if (wanted(4) || wanted(5)) {
    try {
      const OverfitOutcome run = overfit_run();
      if (wanted(4)) emit(check_overfit(run));
      if (wanted(5)) emit(check_probe(run));
    } catch (const std::exception& e) {
      for (int id : {4, 5})
        if (wanted(id)) emit(CheckResult{id, "overfit run", false, std::string("FAILED: exception: ") + e.what(), 0.0});
    }
  }
  guarded(6, "metric fixed points", check_metric_fixed_points);
  guarded(7, "metric oracles", check_metric_oracles);
  guarded(8, "BVH fixtures", [&] { return check_bvh_fixtures(options.fixtures); });
  guarded(9, "ablation plumbing", [&] { return check_ablations(options.work / "ablation"); });
  guarded(10, "end-to-end determinism", [&] { return check_end_to_end(options.cli, options.work / "e2e"); });
  return results;
}

std::string format_check(const CheckResult& r) {
  return fmt::format("[{}] criterion {:>2}: {} | {} ({:.1f} s)", r.pass ? "PASS" : "FAIL", r.id, r.title, r.detail,
                     r.seconds);
}

}  // namespace cosg::cli
