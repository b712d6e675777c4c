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

#include <span>
#include <string>
#include <vector>

#include "cosg/audio.hpp"
#include "cosg/checkpoint.hpp"
#include "cosg/motion.hpp"
#include "cosg/text.hpp"
#include "cosg/trainer.hpp"

namespace cosg {

/// Frame-aligned feature streams of one clip.
struct ClipStreams {
  std::string id;
  Tensor gesture;  // T x 216
  Tensor text;     // T x 300
  Tensor audio;    // T x 80 log-mel
  Tensor rhythm;   // T x 3

  std::size_t frames() const { return gesture.rows(); }
};

struct ExtractOptions {
  std::vector<std::string> joints = default_gesture_joints();
  FacingJoints facing;
  FeatureOptions features;
  double fps = kFeatureFps;
  double fps_tolerance = 1e-3;
  /// Largest allowed difference between motion and audio frame counts
  /// before the longer stream is clipped.
  std::size_t max_length_mismatch = 30;
};

/// Text, log-mel and rhythm streams of a speech recording, all with the
/// audio's frame count at `fps`.
struct SpeechStreams {
  Tensor text;
  Tensor audio;
  Tensor rhythm;

  std::size_t frames() const { return audio.rows(); }
};

SpeechStreams extract_speech(const AudioBuffer& audio, std::span<const WordTiming> words,
                             const WordVectors& vectors, double fps = kFeatureFps);

/// Joint selection, root normalisation and gesture features for the motion;
/// resampling, log-mel and rhythm for the audio; word alignment for the text.
/// All streams are clipped to the shorter of motion and audio. `normalized`
/// receives the selected, root-normalised clip when non-null.
ClipStreams extract_streams(const std::string& id, const MotionClip& motion, const AudioBuffer& audio,
                            std::span<const WordTiming> words, const WordVectors& vectors,
                            const ExtractOptions& options, MotionClip* normalized = nullptr);

/// Standardisation statistics for the gesture, log-mel and rhythm streams.
struct StreamStats {
  NormStats gesture;
  NormStats audio;
  NormStats rhythm;

  void save(Checkpoint& ck, const std::string& prefix = "stats/") const;
  static StreamStats load(const Checkpoint& ck, const std::string& prefix = "stats/");
};

StreamStats fit_stream_stats(std::span<const ClipStreams> clips);
ClipStreams normalize_streams(const ClipStreams& clip, const StreamStats& stats);

/// Windows of every (normalised) clip, in clip order.
std::vector<Sample> training_samples(std::span<const ClipStreams> clips, const WindowSpec& spec);

/// Stores streams as "features/<id>/{gesture,text,audio,rhythm}".
void save_streams(Checkpoint& ck, std::span<const ClipStreams> clips);
std::vector<ClipStreams> load_streams(const Checkpoint& ck);

}  // namespace cosg
