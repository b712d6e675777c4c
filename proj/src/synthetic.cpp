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

#include "cosg/synthetic.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <fmt/format.h>

#include "cosg/errors.hpp"
#include "cosg/random.hpp"

namespace cosg::synthetic {
namespace {

const std::vector<Channel> kRootChannels = {Channel::kXposition, Channel::kYposition, Channel::kZposition,
                                            Channel::kZrotation, Channel::kXrotation, Channel::kYrotation};
const std::vector<Channel> kJointChannels = {Channel::kZrotation, Channel::kXrotation, Channel::kYrotation};

int add(Skeleton& s, const std::string& name, int parent, Eigen::Vector3d offset) {
  Joint j;
  j.name = name;
  j.parent = parent;
  j.offset = offset;
  j.channels = parent < 0 ? kRootChannels : kJointChannels;
  s.joints.push_back(std::move(j));
  return static_cast<int>(s.joints.size()) - 1;
}

void end(Skeleton& s, int joint, Eigen::Vector3d offset) { s.joints[static_cast<std::size_t>(joint)].end_site = offset; }

}  // namespace

Skeleton skeleton() {
  Skeleton s;
  const int root = add(s, "b_root", -1, {0, 0, 0});
  for (const char* side : {"l", "r"}) {
    const double x = side[0] == 'l' ? 1.0 : -1.0;
    int up = add(s, fmt::format("b_{}_upleg", side), root, {9.0 * x, -4.0, 0.0});
    int leg = add(s, fmt::format("b_{}_leg", side), up, {0.0, -42.0, 0.0});
    int foot = add(s, fmt::format("b_{}_foot", side), leg, {0.0, -40.0, 0.0});
    end(s, foot, {0.0, -5.0, 12.0});
  }
  int spine = add(s, "b_spine0", root, {0.0, 6.0, -1.0});
  spine = add(s, "b_spine1", spine, {0.0, 10.0, 0.5});
  spine = add(s, "b_spine2", spine, {0.0, 11.0, 0.5});
  spine = add(s, "b_spine3", spine, {0.0, 12.0, 0.0});
  const int neck = add(s, "b_neck0", spine, {0.0, 13.0, -0.5});
  const int head = add(s, "b_head", neck, {0.0, 9.0, 1.0});
  end(s, head, {0.0, 16.0, 2.0});
  for (const char* side : {"r", "l"}) {
    const double x = side[0] == 'l' ? 1.0 : -1.0;
    int j = add(s, fmt::format("b_{}_shoulder", side), spine, {4.0 * x, 9.0, 0.0});
    j = add(s, fmt::format("b_{}_arm", side), j, {14.0 * x, 0.0, -1.0});
    j = add(s, fmt::format("b_{}_arm_twist", side), j, {13.0 * x, 0.0, 0.0});
    j = add(s, fmt::format("b_{}_forearm", side), j, {13.0 * x, 0.0, 0.0});
    j = add(s, fmt::format("b_{}_wrist_twist", side), j, {12.0 * x, 0.0, 0.5});
    j = add(s, fmt::format("b_{}_wrist", side), j, {12.0 * x, 0.0, 0.0});
    j = add(s, fmt::format("b_{}_index1", side), j, {8.0 * x, 0.0, 1.5});
    end(s, j, {3.0 * x, 0.0, 0.0});
  }
  s.validate();
  return s;
}

MotionClip motion(const Skeleton& skel, const MotionOptions& options) {
  MotionClip clip(skel, options.fps, options.frames);
  Rng rng(options.seed);
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  struct Wave {
    double amp, freq, phase;
  };
  const std::size_t n = skel.size();
  // Three sinusoids per rotation channel with frequencies 0.2 - 1.5 Hz.
  std::vector<Wave> waves(n * 3 * 3);
  for (auto& w : waves) {
    w.amp = options.amplitude * rng.uniform(0.1, 0.5);
    w.freq = rng.uniform(0.2, 1.5);
    w.phase = rng.uniform(0.0, kTwoPi);
  }
  const Wave drift_x{rng.uniform(2.0, 6.0), rng.uniform(0.05, 0.15), rng.uniform(0.0, kTwoPi)};
  const Wave drift_z{rng.uniform(2.0, 6.0), rng.uniform(0.05, 0.15), rng.uniform(0.0, kTwoPi)};
  const Eigen::Matrix3d heading = axis_rotation(Axis::kY, options.yaw_degrees);
  auto eval = [&](const Wave& w, double t) { return w.amp * std::sin(kTwoPi * w.freq * t + w.phase); };
  for (std::size_t f = 0; f < options.frames; ++f) {
    const double t = static_cast<double>(f) / options.fps;
    for (std::size_t j = 0; j < n; ++j) {
      Eigen::Vector3d a = Eigen::Vector3d::Zero();
      for (int c = 0; c < 3; ++c)
        for (int k = 0; k < 3; ++k) a[c] += eval(waves[(j * 3 + static_cast<std::size_t>(c)) * 3 + static_cast<std::size_t>(k)], t);
      if (j == 0) {
        // Keep the body upright: small sway on the root, heading carried by the yaw.
        const Eigen::Matrix3d sway = euler_to_rotmat(a * 0.2, skel.joints[0].rotation_order());
        a = rotmat_to_euler(heading * sway, skel.joints[0].rotation_order());
        const Eigen::Vector3d local(eval(drift_x, t), 0.0, eval(drift_z, t));
        clip.set_translation(f, 0, options.origin + heading * local);
      }
      clip.set_rotation(f, j, a);
    }
  }
  clip.validate();
  return clip;
}

AudioBuffer speech(const SpeechOptions& options) {
  Rng rng(options.seed ^ 0x5eed5eedULL);
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  const auto n = static_cast<std::size_t>(std::llround(options.seconds * options.rate));
  AudioBuffer a;
  a.sample_rate = options.rate;
  a.samples.resize(n);
  const double glide = rng.uniform(0.2, 0.6);
  const double glide_phase = rng.uniform(0.0, kTwoPi);
  const double syllable = rng.uniform(2.5, 4.0);
  const double syllable_phase = rng.uniform(0.0, kTwoPi);
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / options.rate;
    const double f0 = options.base_pitch * (1.0 + 0.25 * std::sin(kTwoPi * glide * t + glide_phase));
    phase += kTwoPi * f0 / options.rate;
    const double env = std::max(0.0, std::sin(kTwoPi * syllable * t + syllable_phase));
    const double voiced = std::sin(phase) + 0.4 * std::sin(2.0 * phase) + 0.2 * std::sin(3.0 * phase);
    a.samples[i] = 0.3 * env * voiced + 0.003 * rng.normal();
  }
  return a;
}

std::vector<WordTiming> transcript(double seconds, const std::string& first, const std::string& second) {
  const double half = std::floor(seconds * 500.0) / 1000.0;
  return {{first, 0.1, half}, {second, half + 0.1, seconds - 0.1}};
}

WordVectors word_vectors(std::span<const std::string> words, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  WordVectors wv(dim);
  for (const auto& w : words) {
    std::vector<double> v(dim);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    wv.insert(w, std::move(v));
  }
  return wv;
}

void write_dataset(const std::filesystem::path& dir, const DatasetOptions& options) {
  namespace fs = std::filesystem;
  for (const char* sub : {"motion", "audio", "text"}) fs::create_directories(dir / sub);
  const std::vector<std::string> vocab = {"hello", "there", "we", "gesture", "while", "speaking", "today", "okay"};
  const Skeleton skel = skeleton();
  std::ofstream manifest(dir / "manifest.csv", std::ios::trunc);
  if (!manifest) throw DataError("cannot write " + (dir / "manifest.csv").string());
  manifest << "id,speaker,split,bvh,wav,tsv\n";
  const double seconds = static_cast<double>(options.frames) / 30.0;
  for (std::size_t c = 0; c < options.clips; ++c) {
    const std::string id = fmt::format("clip{:03d}", c);
    const std::uint64_t seed = options.seed * 1000 + c;
    MotionOptions mo;
    mo.frames = options.frames;
    mo.seed = seed;
    mo.yaw_degrees = 35.0 * static_cast<double>(c);
    mo.origin = Eigen::Vector3d(10.0 * static_cast<double>(c), 95.0, -5.0 * static_cast<double>(c));
    save_bvh(dir / "motion" / (id + ".bvh"), motion(skel, mo));
    SpeechOptions so;
    so.seconds = seconds;
    so.rate = 48000.0;
    so.base_pitch = 110.0 + 30.0 * static_cast<double>(c % 4);
    so.seed = seed;
    write_wav(dir / "audio" / (id + ".wav"), speech(so));
    const std::vector<WordTiming> words =
        transcript(seconds, vocab[(2 * c) % vocab.size()], vocab[(2 * c + 1) % vocab.size()]);
    write_transcript(dir / "text" / (id + ".tsv"), words);
    const std::size_t speaker = c % std::max<std::size_t>(1, options.speakers);
    const char* split = c + 1 == options.clips && options.clips > 1 ? "test" : "train";
    manifest << fmt::format("{},spk{},{},motion/{}.bvh,audio/{}.wav,text/{}.tsv\n", id, speaker, split, id, id, id);
  }
  // The last vocabulary word is left out so the corpus exercises the
  // out-of-vocabulary path.
  const std::vector<std::string> known(vocab.begin(), vocab.end() - 1);
  const WordVectors wv = word_vectors(known, kWordDim, options.seed);
  std::ofstream vec(dir / "vectors.txt", std::ios::trunc);
  vec << known.size() << ' ' << kWordDim << '\n';
  for (const auto& w : known) {
    vec << w;
    for (double v : wv.lookup(w)) vec << ' ' << fmt::format("{:.6f}", v);
    vec << '\n';
  }
}

}  // namespace cosg::synthetic
