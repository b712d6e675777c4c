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

#include <filesystem>
#include <span>
#include <vector>

#include "cosg/tensor.hpp"

namespace cosg {

inline constexpr double kSampleRate = 16000.0;
inline constexpr double kFeatureFps = 30.0;
inline constexpr std::size_t kMelBands = 80;

struct AudioBuffer {
  std::vector<double> samples;  // mono, nominally in [-1, 1]
  double sample_rate = kSampleRate;

  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

/// Reads a RIFF/WAVE file: integer PCM (8/16/24/32-bit) or IEEE float
/// (32/64-bit), plain or extensible header. Only the first channel is kept.
AudioBuffer read_wav(const std::filesystem::path& path);

/// Writes mono 16-bit PCM; samples are clipped to [-1, 1].
void write_wav(const std::filesystem::path& path, const AudioBuffer& audio);

/// Rational polyphase resampler with a Kaiser-windowed sinc low-pass filter.
/// A 16 kHz input is returned unchanged.
AudioBuffer resample_to_16k(const AudioBuffer& audio);
AudioBuffer resample(const AudioBuffer& audio, double target_rate);

/// Number of feature frames for `samples` samples at 16 kHz, rounded to the
/// nearest frame so a clip of T / fps seconds yields exactly T frames.
std::size_t feature_frame_count(std::size_t samples, double fps = kFeatureFps);

struct LogMelConfig {
  std::size_t n_fft = 512;
  std::size_t window = 400;  // 25 ms
  std::size_t bands = kMelBands;
  double f_min = 0.0;
  double f_max = 8000.0;
  double floor = 1e-6;
};

/// T x bands log-mel power spectrogram with frames centred on t / fps.
Tensor logmel_frames(const AudioBuffer& audio, double fps = kFeatureFps, const LogMelConfig& config = {});

/// HTK mel filter bank, bands x (n_fft / 2 + 1).
Tensor mel_filterbank(std::size_t bands, std::size_t n_fft, double sample_rate, double f_min, double f_max);

struct RhythmConfig {
  std::size_t window = 640;  // 40 ms
  double min_pitch = 60.0;
  double max_pitch = 500.0;
  double voicing_threshold = 0.45;
};

/// T x 3: pitch in Hz (0 when unvoiced), log-energy, RMS volume.
Tensor rhythm_features(const AudioBuffer& audio, double fps = kFeatureFps, const RhythmConfig& config = {});

/// Autocorrelation pitch estimate of one analysis window, or 0 when unvoiced.
double estimate_pitch(std::span<const double> frame, double sample_rate, const RhythmConfig& config = {});

}  // namespace cosg
