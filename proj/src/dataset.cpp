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

#include "cosg/dataset.hpp"

#include <cmath>
#include <set>

#include "cosg/errors.hpp"

namespace cosg {

SpeechStreams extract_speech(const AudioBuffer& audio, std::span<const WordTiming> words,
                             const WordVectors& vectors, double fps) {
  const AudioBuffer a16 = resample_to_16k(audio);
  SpeechStreams out;
  out.audio = logmel_frames(a16, fps);
  out.rhythm = rhythm_features(a16, fps);
  out.text = align_text(words, vectors, out.audio.rows(), fps);
  return out;
}

ClipStreams extract_streams(const std::string& id, const MotionClip& motion, const AudioBuffer& audio,
                            std::span<const WordTiming> words, const WordVectors& vectors,
                            const ExtractOptions& options, MotionClip* normalized) {
  if (std::abs(motion.fps - options.fps) > options.fps_tolerance) {
    throw DataError("clip " + id + " is at " + std::to_string(motion.fps) + " fps; only " +
                    std::to_string(options.fps) + " fps is supported (no resampling)");
  }
  MotionClip clip = root_normalize(select_joints(motion, options.joints), options.facing);
  Tensor gesture = gesture_features(clip, nullptr, options.features).frames;
  const AudioBuffer a16 = resample_to_16k(audio);
  Tensor mel = logmel_frames(a16, options.fps);
  Tensor rhythm = rhythm_features(a16, options.fps);
  const std::size_t tm = gesture.rows(), ta = mel.rows();
  if (std::max(tm, ta) - std::min(tm, ta) > options.max_length_mismatch) {
    throw DataError("clip " + id + ": motion has " + std::to_string(tm) + " frames but audio covers " +
                    std::to_string(ta));
  }
  const std::size_t frames = std::min(tm, ta);
  ClipStreams out;
  out.id = id;
  out.gesture = gesture.slice_rows(0, frames);
  out.audio = mel.slice_rows(0, frames);
  out.rhythm = rhythm.slice_rows(0, frames);
  out.text = align_text(words, vectors, frames, options.fps);
  if (normalized) *normalized = std::move(clip);
  return out;
}

void StreamStats::save(Checkpoint& ck, const std::string& prefix) const {
  ck.put(prefix + "gesture/mean", gesture.mean);
  ck.put(prefix + "gesture/std", gesture.std);
  ck.put(prefix + "audio/mean", audio.mean);
  ck.put(prefix + "audio/std", audio.std);
  ck.put(prefix + "rhythm/mean", rhythm.mean);
  ck.put(prefix + "rhythm/std", rhythm.std);
}

StreamStats StreamStats::load(const Checkpoint& ck, const std::string& prefix) {
  StreamStats s;
  s.gesture = {ck.at(prefix + "gesture/mean"), ck.at(prefix + "gesture/std")};
  s.audio = {ck.at(prefix + "audio/mean"), ck.at(prefix + "audio/std")};
  s.rhythm = {ck.at(prefix + "rhythm/mean"), ck.at(prefix + "rhythm/std")};
  return s;
}

StreamStats fit_stream_stats(std::span<const ClipStreams> clips) {
  if (clips.empty()) throw DataError("no training clips to fit normalisation statistics");
  std::vector<Tensor> g, a, r;
  for (const auto& c : clips) {
    g.push_back(c.gesture);
    a.push_back(c.audio);
    r.push_back(c.rhythm);
  }
  return {fit_norm_stats(std::span<const Tensor>(g)), fit_norm_stats(std::span<const Tensor>(a)),
          fit_norm_stats(std::span<const Tensor>(r))};
}

ClipStreams normalize_streams(const ClipStreams& clip, const StreamStats& stats) {
  ClipStreams out = clip;
  out.gesture = normalize(clip.gesture, stats.gesture);
  out.audio = normalize(clip.audio, stats.audio);
  out.rhythm = normalize(clip.rhythm, stats.rhythm);
  return out;
}

std::vector<Sample> training_samples(std::span<const ClipStreams> clips, const WindowSpec& spec) {
  std::vector<Sample> out;
  for (const auto& c : clips) {
    const Tensor mods[] = {c.text, c.audio, c.rhythm};
    const auto windows = window_samples(c.gesture, std::span<const Tensor>(mods), spec);
    for (const auto& s : samples_from_windows(windows)) out.push_back(s);
  }
  return out;
}

void save_streams(Checkpoint& ck, std::span<const ClipStreams> clips) {
  for (const auto& c : clips) {
    const std::string p = "features/" + c.id + "/";
    ck.put(p + "gesture", c.gesture);
    ck.put(p + "text", c.text);
    ck.put(p + "audio", c.audio);
    ck.put(p + "rhythm", c.rhythm);
  }
}

std::vector<ClipStreams> load_streams(const Checkpoint& ck) {
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const auto& name : ck.names("features/")) {
    const auto slash = name.find('/', 9);
    if (slash == std::string::npos) throw DataError("malformed feature entry '" + name + "'");
    const std::string id = name.substr(9, slash - 9);
    if (seen.insert(id).second) ids.push_back(id);
  }
  std::vector<ClipStreams> out;
  for (const auto& id : ids) {
    const std::string p = "features/" + id + "/";
    ClipStreams c{id, ck.at(p + "gesture"), ck.at(p + "text"), ck.at(p + "audio"), ck.at(p + "rhythm")};
    const std::size_t t = c.gesture.rows();
    if (c.text.rows() != t || c.audio.rows() != t || c.rhythm.rows() != t) {
      throw DataError("feature streams of clip " + id + " differ in length");
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace cosg
