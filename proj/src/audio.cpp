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

#include "cosg/audio.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>

#include "cosg/errors.hpp"

namespace cosg {
namespace {

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

double decode_sample(const unsigned char* p, std::uint16_t format, std::uint16_t bits) {
  if (format == 3) {
    if (bits == 32) {
      float f;
      std::uint32_t u = le32(p);
      std::memcpy(&f, &u, 4);
      return f;
    }
    std::uint64_t u = static_cast<std::uint64_t>(le32(p)) | (static_cast<std::uint64_t>(le32(p + 4)) << 32);
    double d;
    std::memcpy(&d, &u, 8);
    return d;
  }
  switch (bits) {
    case 8: return (static_cast<double>(p[0]) - 128.0) / 128.0;
    case 16: return static_cast<std::int16_t>(le16(p)) / 32768.0;
    case 24: {
      std::int32_t v = static_cast<std::int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
      if (v & 0x800000) v -= 0x1000000;
      return v / 8388608.0;
    }
    default: return static_cast<std::int32_t>(le32(p)) / 2147483648.0;
  }
}

double bessel_i0(double x) { return std::cyl_bessel_i(0.0, x); }

}  // namespace

// ---------------------------------------------------------------------------
// WAV

AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open audio file " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto fail = [&](const std::string& why) { return DataError(path.string() + ": " + why); };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw fail("not a RIFF/WAVE file");
  }
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::size_t size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = std::min(size, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) throw fail("fmt chunk too short");
      format = le16(chunk + 8);
      channels = le16(chunk + 10);
      rate = le32(chunk + 12);
      bits = le16(chunk + 22);
      if (format == 0xFFFE) {
        if (avail < 26) throw fail("extensible fmt chunk too short");
        format = le16(chunk + 8 + 24);
      }
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_size = avail;
    }
    pos = body + size + (size & 1);
  }
  if (format == 0) throw fail("missing fmt chunk");
  if (!data) throw fail("missing data chunk");
  const bool pcm_ok = format == 1 && (bits == 8 || bits == 16 || bits == 24 || bits == 32);
  const bool float_ok = format == 3 && (bits == 32 || bits == 64);
  if (!pcm_ok && !float_ok) {
    throw fail("unsupported sample format " + std::to_string(format) + " with " + std::to_string(bits) + " bits");
  }
  if (channels == 0 || rate == 0) throw fail("invalid channel count or sample rate");
  const std::size_t stride = static_cast<std::size_t>(channels) * (bits / 8);
  AudioBuffer audio;
  audio.sample_rate = rate;
  audio.samples.reserve(data_size / stride);
  for (std::size_t off = 0; off + stride <= data_size; off += stride) {
    const double v = decode_sample(data + off, format, bits);
    if (!std::isfinite(v)) throw fail("non-finite sample");
    audio.samples.push_back(v);
  }
  return audio;
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& audio) {
  const auto n = static_cast<std::uint32_t>(audio.samples.size());
  const auto rate = static_cast<std::uint32_t>(std::lround(audio.sample_rate));
  std::string out;
  out.reserve(44 + 2 * n);
  out += "RIFF";
  put32(out, 36 + 2 * n);
  out += "WAVEfmt ";
  put32(out, 16);
  put16(out, 1);
  put16(out, 1);
  put32(out, rate);
  put32(out, rate * 2);
  put16(out, 2);
  put16(out, 16);
  out += "data";
  put32(out, 2 * n);
  for (double s : audio.samples) {
    const double c = std::clamp(s, -1.0, 1.0);
    put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(c * 32767.0))));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open " + path.string() + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

// ---------------------------------------------------------------------------
// Resampling

AudioBuffer resample(const AudioBuffer& audio, double target_rate) {
  if (audio.samples.empty()) throw DataError("resample: empty audio buffer");
  if (audio.sample_rate < 8000.0) {
    throw DataError("resample: source rate " + std::to_string(audio.sample_rate) + " Hz is below 8 kHz");
  }
  const long src = std::lround(audio.sample_rate);
  const long dst = std::lround(target_rate);
  if (src == dst) return audio;
  const long g = std::gcd(src, dst);
  const long up = dst / g, down = src / g;
  const long wide = std::max(up, down);

  constexpr long kZeroCrossings = 16;
  constexpr double kBeta = 8.6;
  constexpr double kRolloff = 0.95;
  const long half = kZeroCrossings * wide;
  const double cutoff = kRolloff / static_cast<double>(wide);  // twice the normalised cutoff
  std::vector<double> taps(static_cast<std::size_t>(2 * half + 1));
  const double norm = bessel_i0(kBeta);
  for (long m = -half; m <= half; ++m) {
    const double x = cutoff * static_cast<double>(m);
    const double sinc = m == 0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
    const double r = static_cast<double>(m) / static_cast<double>(half);
    const double w = bessel_i0(kBeta * std::sqrt(std::max(0.0, 1.0 - r * r))) / norm;
    taps[static_cast<std::size_t>(m + half)] = cutoff * sinc * w * static_cast<double>(up);
  }

  const auto n_in = static_cast<long>(audio.samples.size());
  const long n_out = (n_in * up + down - 1) / down;
  AudioBuffer out;
  out.sample_rate = static_cast<double>(dst);
  out.samples.resize(static_cast<std::size_t>(n_out));
  for (long n = 0; n < n_out; ++n) {
    const long centre = n * down;
    // Input indices k with |centre - k * up| <= half.
    const long k_lo = std::max(0L, (centre - half + up - 1) / up);
    const long k_hi = std::min(n_in - 1, (centre + half) / up);
    double acc = 0.0;
    for (long k = k_lo; k <= k_hi; ++k) {
      acc += audio.samples[static_cast<std::size_t>(k)] * taps[static_cast<std::size_t>(centre - k * up + half)];
    }
    out.samples[static_cast<std::size_t>(n)] = acc;
  }
  return out;
}

AudioBuffer resample_to_16k(const AudioBuffer& audio) { return resample(audio, kSampleRate); }

// ---------------------------------------------------------------------------
// Spectral features

std::size_t feature_frame_count(std::size_t samples, double fps) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(samples) * fps / kSampleRate));
}

Tensor mel_filterbank(std::size_t bands, std::size_t n_fft, double sample_rate, double f_min, double f_max) {
  auto to_mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
  auto to_hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  const std::size_t bins = n_fft / 2 + 1;
  std::vector<double> edges(bands + 2);
  const double lo = to_mel(f_min), hi = to_mel(f_max);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = to_hz(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bands + 1));
  }
  Tensor fb(bands, bins);
  for (std::size_t b = 0; b < bands; ++b) {
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
      const double rise = (f - edges[b]) / (edges[b + 1] - edges[b]);
      const double fall = (edges[b + 2] - f) / (edges[b + 2] - edges[b + 1]);
      fb(b, k) = std::max(0.0, std::min(rise, fall));
    }
  }
  return fb;
}

Tensor logmel_frames(const AudioBuffer& audio, double fps, const LogMelConfig& config) {
  if (std::lround(audio.sample_rate) != std::lround(kSampleRate)) {
    throw DataError("logmel_frames: expected 16 kHz audio, got " + std::to_string(audio.sample_rate) + " Hz");
  }
  const std::size_t n = audio.samples.size();
  if (n < config.window) {
    throw DataError("logmel_frames: audio has " + std::to_string(n) + " samples, shorter than one " +
                    std::to_string(config.window) + "-sample window");
  }
  if (config.n_fft < config.window) throw ConfigError("logmel_frames: n_fft must cover the window");
  const std::size_t frames = feature_frame_count(n, fps);
  const std::size_t bins = config.n_fft / 2 + 1;
  const Tensor fb = mel_filterbank(config.bands, config.n_fft, kSampleRate, config.f_min, config.f_max);

  std::vector<double> hann(config.window);
  for (std::size_t i = 0; i < config.window; ++i) {
    hann[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(config.window));
  }
  Eigen::FFT<double> fft;
  std::vector<double> buffer(config.n_fft, 0.0);
  std::vector<std::complex<double>> spectrum;
  std::vector<double> power(bins);
  Tensor out(frames, config.bands);
  for (std::size_t t = 0; t < frames; ++t) {
    const auto centre = static_cast<long>(std::lround(static_cast<double>(t) * kSampleRate / fps));
    const long start = std::clamp(centre - static_cast<long>(config.window / 2), 0L,
                                  static_cast<long>(n - config.window));
    std::fill(buffer.begin(), buffer.end(), 0.0);
    for (std::size_t i = 0; i < config.window; ++i) buffer[i] = audio.samples[static_cast<std::size_t>(start) + i] * hann[i];
    fft.fwd(spectrum, buffer);
    for (std::size_t k = 0; k < bins; ++k) power[k] = std::norm(spectrum[k]);
    for (std::size_t b = 0; b < config.bands; ++b) {
      double e = 0.0;
      for (std::size_t k = 0; k < bins; ++k) e += fb(b, k) * power[k];
      out(t, b) = std::log(e + config.floor);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rhythm

double estimate_pitch(std::span<const double> x, double sample_rate, const RhythmConfig& config) {
  const auto w = static_cast<long>(x.size());
  const long min_lag = std::max(2L, static_cast<long>(std::floor(sample_rate / config.max_pitch)));
  const long max_lag = std::min(w - 2, static_cast<long>(std::ceil(sample_rate / config.min_pitch)));
  if (max_lag <= min_lag) return 0.0;
  std::vector<double> r(static_cast<std::size_t>(max_lag + 2), 0.0);
  for (long lag = min_lag - 1; lag <= max_lag + 1; ++lag) {
    double xy = 0.0, xx = 0.0, yy = 0.0;
    for (long i = 0; i + lag < w; ++i) {
      const double a = x[static_cast<std::size_t>(i)], b = x[static_cast<std::size_t>(i + lag)];
      xy += a * b;
      xx += a * a;
      yy += b * b;
    }
    const double den = std::sqrt(xx * yy);
    r[static_cast<std::size_t>(lag)] = den > 0.0 ? xy / den : 0.0;
  }
  auto at = [&](long lag) { return r[static_cast<std::size_t>(lag)]; };
  auto is_peak = [&](long lag) { return at(lag) > at(lag - 1) && at(lag) >= at(lag + 1); };
  double best = -1.0;
  for (long lag = min_lag; lag <= max_lag; ++lag)
    if (is_peak(lag)) best = std::max(best, at(lag));
  if (best <= config.voicing_threshold) return 0.0;
  // The earliest strong peak avoids locking onto a multiple of the period.
  for (long lag = min_lag; lag <= max_lag; ++lag) {
    if (!is_peak(lag) || at(lag) < 0.9 * best) continue;
    const double a = at(lag - 1), b = at(lag), c = at(lag + 1);
    const double curv = a - 2.0 * b + c;
    const double shift = curv < 0.0 ? std::clamp(0.5 * (a - c) / curv, -0.5, 0.5) : 0.0;
    const double f0 = sample_rate / (static_cast<double>(lag) + shift);
    return std::clamp(f0, config.min_pitch, config.max_pitch);
  }
  return 0.0;
}

Tensor rhythm_features(const AudioBuffer& audio, double fps, const RhythmConfig& config) {
  if (std::lround(audio.sample_rate) != std::lround(kSampleRate)) {
    throw DataError("rhythm_features: expected 16 kHz audio, got " + std::to_string(audio.sample_rate) + " Hz");
  }
  const std::size_t n = audio.samples.size();
  const std::size_t frames = feature_frame_count(n, fps);
  const std::size_t w = std::min(config.window, n);
  Tensor out(frames, 3);
  for (std::size_t t = 0; t < frames; ++t) {
    const auto centre = static_cast<long>(std::lround(static_cast<double>(t) * kSampleRate / fps));
    const long start = std::clamp(centre - static_cast<long>(w / 2), 0L, static_cast<long>(n - w));
    const std::span<const double> frame(audio.samples.data() + start, w);
    double sum_sq = 0.0;
    for (double v : frame) sum_sq += v * v;
    out(t, 0) = estimate_pitch(frame, kSampleRate, config);
    out(t, 1) = std::log(sum_sq + 1e-8);
    out(t, 2) = std::sqrt(sum_sq / static_cast<double>(w));
  }
  return out;
}

}  // namespace cosg
