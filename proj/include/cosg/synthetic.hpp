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

#include <cstdint>

#include "cosg/audio.hpp"
#include "cosg/motion.hpp"
#include "cosg/text.hpp"

namespace cosg::synthetic {

/// A skeleton following the challenge naming scheme: a translating root,
/// legs, a spine-neck-head chain and two arms ending in a finger joint. Left
/// is +X and the rest pose faces +Z (Y up).
Skeleton skeleton();

struct MotionOptions {
  std::size_t frames = 200;
  double fps = 30.0;
  double yaw_degrees = 0.0;   // initial heading of the root about +Y
  Eigen::Vector3d origin = Eigen::Vector3d(0.0, 95.0, 0.0);
  double amplitude = 25.0;    // peak joint angle, degrees
  std::uint64_t seed = 1;
};

/// Smooth sum-of-sinusoids motion on `skel`, deterministic in the seed.
MotionClip motion(const Skeleton& skel, const MotionOptions& options);

struct SpeechOptions {
  double seconds = 4.0;
  double rate = 16000.0;
  double base_pitch = 140.0;  // Hz
  std::uint64_t seed = 1;
};

/// Voiced tone with a gliding pitch, a syllable-rate amplitude envelope and a
/// little noise.
AudioBuffer speech(const SpeechOptions& options);

/// Two words: the first spans [0.1 s, half), the second [half + 0.1 s, end - 0.1 s).
std::vector<WordTiming> transcript(double seconds, const std::string& first, const std::string& second);

/// Random vectors (uniform in [-1, 1)) for each word.
WordVectors word_vectors(std::span<const std::string> words, std::size_t dim, std::uint64_t seed);

struct DatasetOptions {
  std::size_t clips = 4;
  std::size_t frames = 240;  // per clip, at 30 fps
  std::size_t speakers = 2;
  std::uint64_t seed = 1;
};

/// Writes a complete toy corpus under `dir`: motion/<id>.bvh, audio/<id>.wav
/// (48 kHz), text/<id>.tsv, manifest.csv (id,speaker,split,bvh,wav,tsv; the
/// last clip is the test split) and vectors.txt.
void write_dataset(const std::filesystem::path& dir, const DatasetOptions& options);

}  // namespace cosg::synthetic
