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

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "cosg/audio.hpp"
#include "cosg/errors.hpp"
#include "cosg/random.hpp"
#include "cosg/text.hpp"

namespace cosg {
namespace {

constexpr double kPi = std::numbers::pi;

AudioBuffer sine(double freq, double seconds, double rate, double amp = 1.0) {
  AudioBuffer a;
  a.sample_rate = rate;
  const auto n = static_cast<std::size_t>(std::llround(seconds * rate));
  a.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) a.samples[i] = amp * std::sin(2.0 * kPi * freq * static_cast<double>(i) / rate);
  return a;
}

std::filesystem::path temp(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

// --------------------------------------------------------------------------
// Resampling

TEST(Resample, SixteenKilohertzIsUnchanged) {
  const AudioBuffer a = sine(300, 0.1, 16000);
  const AudioBuffer b = resample_to_16k(a);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_EQ(b.sample_rate, 16000.0);
}

TEST(Resample, LengthArithmetic) {
  EXPECT_NEAR(static_cast<double>(resample_to_16k(sine(100, 1.0, 48000)).samples.size()), 16000.0, 1.0);
  EXPECT_NEAR(static_cast<double>(resample_to_16k(sine(100, 1.0, 44100)).samples.size()), 16000.0, 1.0);
  EXPECT_NEAR(static_cast<double>(resample_to_16k(sine(100, 1.0, 8000)).samples.size()), 16000.0, 1.0);
}

TEST(Resample, ToneKeepsItsFrequency) {
  const AudioBuffer out = resample_to_16k(sine(440, 1.0, 48000));
  // Independent oracle: magnitude DFT of the output, bin width 1 Hz.
  std::vector<std::complex<double>> spec;
  Eigen::FFT<double> fft;
  fft.fwd(spec, out.samples);
  std::size_t best = 0;
  for (std::size_t k = 1; k < spec.size() / 2; ++k)
    if (std::abs(spec[k]) > std::abs(spec[best])) best = k;
  const double hz = static_cast<double>(best) * 16000.0 / static_cast<double>(out.samples.size());
  EXPECT_NEAR(hz, 440.0, 1.0);
  // Passband gain near unity away from the edges.
  double peak = 0.0;
  for (std::size_t i = 2000; i < 14000; ++i) peak = std::max(peak, std::abs(out.samples[i]));
  EXPECT_NEAR(peak, 1.0, 1e-3);
}

TEST(Resample, Errors) {
  EXPECT_THROW(resample_to_16k(AudioBuffer{{}, 48000}), DataError);
  EXPECT_THROW(resample_to_16k(sine(100, 0.1, 4000)), DataError);
}

// --------------------------------------------------------------------------
// WAV

TEST(Wav, Pcm16RoundTrip) {
  const AudioBuffer a = sine(220, 0.05, 22050, 0.5);
  write_wav(temp("cosg_tone.wav"), a);
  const AudioBuffer b = read_wav(temp("cosg_tone.wav"));
  EXPECT_EQ(b.sample_rate, 22050.0);
  ASSERT_EQ(b.samples.size(), a.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) EXPECT_NEAR(a.samples[i], b.samples[i], 1.0 / 32767.0);
  std::filesystem::remove(temp("cosg_tone.wav"));
}

TEST(Wav, StereoFloatExtensibleTakesFirstChannel) {
  // Hand-built WAVE_FORMAT_EXTENSIBLE, 2 channels of float32.
  std::string bytes;
  auto u32 = [&](std::uint32_t v) { for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>(v >> (8 * i))); };
  auto u16 = [&](std::uint16_t v) { bytes.push_back(static_cast<char>(v)); bytes.push_back(static_cast<char>(v >> 8)); };
  auto f32 = [&](float f) { std::uint32_t u; std::memcpy(&u, &f, 4); u32(u); };
  const float left[] = {0.25f, -0.5f, 0.75f};
  bytes += "RIFF";
  u32(4 + 8 + 40 + 8 + 24);
  bytes += "WAVEfmt ";
  u32(40);
  u16(0xFFFE); u16(2); u32(8000); u32(8000 * 8); u16(8); u16(32);
  u16(22); u16(32); u32(3);
  u16(3); u16(0); u32(0x00100000); u32(0xAA000080); u32(0x719B3800);
  bytes += "data";
  u32(24);
  for (float l : left) { f32(l); f32(9.0f); }
  {
    std::ofstream f(temp("cosg_ext.wav"), std::ios::binary);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  const AudioBuffer a = read_wav(temp("cosg_ext.wav"));
  EXPECT_EQ(a.sample_rate, 8000.0);
  ASSERT_EQ(a.samples.size(), 3u);
  EXPECT_EQ(a.samples[0], 0.25);
  EXPECT_EQ(a.samples[1], -0.5);
  EXPECT_EQ(a.samples[2], 0.75);
  std::filesystem::remove(temp("cosg_ext.wav"));
  EXPECT_THROW(read_wav(temp("cosg_ext.wav")), DataError);
}

// --------------------------------------------------------------------------
// Log-mel

TEST(LogMel, SilenceIsFloor) {
  AudioBuffer a{std::vector<double>(16000, 0.0), 16000};
  const Tensor m = logmel_frames(a);
  EXPECT_EQ(m.rows(), 30u);
  EXPECT_EQ(m.cols(), 80u);
  for (double v : m.values()) EXPECT_EQ(v, std::log(1e-6));
}

TEST(LogMel, DoublingAmplitudeAddsLogFour) {
  Rng rng(3);
  AudioBuffer a{std::vector<double>(8000), 16000};
  for (double& v : a.samples) v = rng.uniform(-0.3, 0.3);
  AudioBuffer b = a;
  for (double& v : b.samples) v *= 2.0;
  const Tensor ma = logmel_frames(a), mb = logmel_frames(b);
  for (std::size_t i = 0; i < ma.size(); ++i) {
    // log(4x + f) - log(x + f) differs from log 4 by at most 3f/x.
    const double x = std::exp(ma[i]) - 1e-6;
    if (x > 1.0) {
      EXPECT_NEAR(mb[i] - ma[i], std::log(4.0), 1e-6);
    }
  }
}

TEST(LogMel, ToneArgmaxBandIsStable) {
  const Tensor m = logmel_frames(sine(1000, 1.0, 16000, 0.5));
  const Tensor fb = mel_filterbank(80, 512, 16000, 0, 8000);
  // Oracle: the band whose filter weight at the 1 kHz bin (k = 32) is largest.
  std::size_t expected = 0;
  for (std::size_t b = 1; b < 80; ++b)
    if (fb(b, 32) > fb(expected, 32)) expected = b;
  for (std::size_t t = 0; t < m.rows(); ++t) {
    std::size_t best = 0;
    for (std::size_t b = 1; b < 80; ++b)
      if (m(t, b) > m(t, best)) best = b;
    EXPECT_EQ(best, expected) << "frame " << t;
  }
}

TEST(LogMel, ShortAudioIsAnError) {
  AudioBuffer a{std::vector<double>(399, 0.1), 16000};
  EXPECT_THROW(logmel_frames(a), DataError);
}

TEST(LogMel, FrameCountsAgreeWithMotionLength) {
  for (std::size_t frames : {1u, 29u, 90u, 100u, 301u}) {
    const auto n = static_cast<std::size_t>(std::llround(static_cast<double>(frames) * 16000.0 / 30.0));
    AudioBuffer a{std::vector<double>(std::max<std::size_t>(n, 400), 0.01), 16000};
    if (n < 400) continue;
    EXPECT_EQ(logmel_frames(a).rows(), frames);
    EXPECT_EQ(rhythm_features(a).rows(), frames);
    EXPECT_EQ(feature_frame_count(n), frames);
  }
}

// --------------------------------------------------------------------------
// Rhythm

TEST(Rhythm, SilenceHasZeroVolumeAndPitch) {
  AudioBuffer a{std::vector<double>(16000, 0.0), 16000};
  const Tensor r = rhythm_features(a);
  for (std::size_t t = 0; t < r.rows(); ++t) {
    EXPECT_EQ(r(t, 0), 0.0);
    EXPECT_EQ(r(t, 1), std::log(1e-8));
    EXPECT_EQ(r(t, 2), 0.0);
  }
}

TEST(Rhythm, SineVolumeAndPitch) {
  const Tensor r = rhythm_features(sine(220, 1.0, 16000));
  for (std::size_t t = 0; t < r.rows(); ++t) {
    EXPECT_NEAR(r(t, 2), std::sqrt(0.5), 0.01);
    EXPECT_NEAR(r(t, 0), 220.0, 11.0);
  }
}

TEST(Rhythm, QuietNoiseIsMostlyUnvoiced) {
  Rng rng(99);
  AudioBuffer a{std::vector<double>(48000), 16000};
  for (double& v : a.samples) v = 0.01 * rng.normal();
  const Tensor r = rhythm_features(a);
  std::size_t unvoiced = 0;
  for (std::size_t t = 0; t < r.rows(); ++t) unvoiced += r(t, 0) == 0.0;
  EXPECT_GE(static_cast<double>(unvoiced), 0.9 * static_cast<double>(r.rows()));
}

TEST(Rhythm, SignAndScaleInvariances) {
  AudioBuffer a = sine(150, 0.5, 16000, 0.3);
  Rng rng(5);
  for (double& v : a.samples) v += 0.05 * rng.normal();
  AudioBuffer neg = a, quiet = a;
  for (double& v : neg.samples) v = -v;
  for (double& v : quiet.samples) v *= 0.004;
  const Tensor ra = rhythm_features(a), rn = rhythm_features(neg), rq = rhythm_features(quiet);
  for (std::size_t t = 0; t < ra.rows(); ++t) {
    EXPECT_EQ(ra(t, 1), rn(t, 1));
    EXPECT_EQ(ra(t, 2), rn(t, 2));
    EXPECT_NEAR(ra(t, 0), rq(t, 0), 1e-6);
    EXPECT_TRUE(ra(t, 0) == 0.0 || (ra(t, 0) >= 60.0 && ra(t, 0) <= 500.0));
  }
}

TEST(Rhythm, Deterministic) {
  const AudioBuffer a = sine(180, 0.4, 16000, 0.2);
  EXPECT_EQ(rhythm_features(a), rhythm_features(a));
  EXPECT_EQ(logmel_frames(a), logmel_frames(a));
}

// --------------------------------------------------------------------------
// Text

WordVectors small_table() {
  WordVectors wv(4);
  wv.insert("hello", {1, 2, 3, 4});
  wv.insert("world", {-1, 0, 0.5, 2});
  return wv;
}

TEST(AlignText, NoWordsGivesPadding) {
  const Tensor t = align_text({}, small_table(), 10);
  EXPECT_EQ(t, Tensor(10, 4, 0.0));
}

TEST(AlignText, SingleWordCoversClip) {
  const WordTiming w[] = {{"hello", 0.0, 2.0}};
  const Tensor t = align_text(w, small_table(), 30);
  for (std::size_t r = 0; r < 30; ++r)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(t(r, c), small_table().lookup("hello")[c]);
}

TEST(AlignText, HalfSecondWord) {
  const WordTiming w[] = {{"world", 0.0, 0.5}};
  const Tensor t = align_text(w, small_table(), 30);
  for (std::size_t r = 0; r < 30; ++r) {
    // Oracle: frame time r / 30 lies in [0, 0.5) exactly for r < 15.
    const double expect = r < 15 ? 2.0 : 0.0;
    EXPECT_EQ(t(r, 3), expect) << r;
  }
}

TEST(AlignText, FallbackAndOverlap) {
  const WordVectors wv = small_table();
  const auto oov = wv.lookup("zebra");
  EXPECT_EQ(oov, wv.fallback("zebra"));
  EXPECT_NE(oov, wv.fallback("zebras"));
  for (double v : oov) {
    EXPECT_GE(v, -0.1);
    EXPECT_LT(v, 0.1);
  }
  EXPECT_EQ(wv.lookup("HELLO"), wv.lookup("hello"));
  const WordTiming clash[] = {{"hello", 0.0, 0.6}, {"world", 0.5, 1.0}};
  EXPECT_THROW(align_text(clash, wv, 30), DataError);
  const WordTiming rows[] = {{"zebra", 0.2, 0.4}};
  const Tensor t = align_text(rows, wv, 30);
  for (std::size_t r = 0; r < 30; ++r) {
    const bool covered = r >= 6 && r < 12;
    EXPECT_EQ(t(r, 0), covered ? oov[0] : 0.0) << r;
  }
}

TEST(WordVectorsFile, LoadsWithOptionalHeader) {
  {
    std::ofstream f(temp("cosg_vec.txt"));
    f << "2 3\nalpha 1 2 3\nbeta 0.5 -0.5 1e-3\n";
  }
  const WordVectors wv = WordVectors::load(temp("cosg_vec.txt"), 3);
  EXPECT_EQ(wv.size(), 2u);
  EXPECT_EQ(wv.lookup("beta"), (std::vector<double>{0.5, -0.5, 1e-3}));
  {
    std::ofstream f(temp("cosg_vec.txt"));
    f << "alpha 1 2 3\nbeta 0.5 -0.5\n";
  }
  try {
    WordVectors::load(temp("cosg_vec.txt"), 3);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::filesystem::remove(temp("cosg_vec.txt"));
}

TEST(Transcript, RoundTripAndErrors) {
  const WordTiming words[] = {{"so", 0.1, 0.35}, {"yes", 0.4, 0.9}};
  write_transcript(temp("cosg_words.tsv"), words);
  const auto back = read_transcript(temp("cosg_words.tsv"));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].word, "yes");
  EXPECT_DOUBLE_EQ(back[1].start, 0.4);
  {
    std::ofstream f(temp("cosg_words.tsv"));
    f << "0.1\t0.2\tok\n0.5\tx\tbad\n";
  }
  try {
    read_transcript(temp("cosg_words.tsv"));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::filesystem::remove(temp("cosg_words.tsv"));
}

}  // namespace
}  // namespace cosg
