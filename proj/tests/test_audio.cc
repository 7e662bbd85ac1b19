// s2f/tests/test_audio.cc

// Copyright 2026  The s2f Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>

#include "s2f/audio.h"
#include "s2f/wav.h"

using namespace s2f;

namespace {

Waveform Make(std::size_t n, int rate, double value = 0.0) {
  Waveform w;
  w.sample_rate_hz = rate;
  w.samples.assign(n, value);
  return w;
}

Waveform Noise(std::size_t n, uint64_t seed) {
  Waveform w = Make(n, 16000);
  CounterRng r(seed);
  for (double &s : w.samples) s = r.Gaussian();
  return w;
}

// Direct O(N^2) DFT of a Hann-windowed, zero-padded frame.
std::vector<std::complex<double>> NaiveFrame(const std::vector<double> &x, std::size_t start,
                                             std::size_t win, std::size_t nfft) {
  std::vector<std::complex<double>> out(nfft / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::complex<double> s = 0;
    for (std::size_t n = 0; n < win; ++n) {
      const double hann = 0.5 - 0.5 * std::cos(2 * std::numbers::pi * n / (win - 1.0));
      const double ang = -2 * std::numbers::pi * static_cast<double>(k * n) / nfft;
      s += x[start + n] * hann * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = s;
  }
  return out;
}

}  // namespace

TEST_SUITE("audio_frontend") {
  TEST_CASE("loop_pad keeps long input and repeats short input cyclically") {
    Waveform full = Noise(96000, 1);
    CHECK(LoopPad(full, 6.0).samples == full.samples);

    Waveform part = Noise(40000, 2);
    Waveform out = LoopPad(part, 6.0);
    REQUIRE(out.samples.size() == 96000);
    CHECK(out.samples[40000] == part.samples[0]);
    for (std::size_t i = 0; i < out.samples.size(); i += 997)
      CHECK(out.samples[i] == part.samples[i % 40000]);

    Waveform one = Make(1, 16000, 0.5);
    Waveform rep = LoopPad(one, 6.0);
    CHECK(rep.samples.size() == 96000);
    CHECK(std::all_of(rep.samples.begin(), rep.samples.end(), [](double v) { return v == 0.5; }));

    CHECK_THROWS_WITH_AS(LoopPad(Make(0, 16000), 6.0), "empty input", Error);
  }

  TEST_CASE("resample_linear") {
    Waveform w = Noise(1234, 3);
    CHECK(ResampleLinear(w, 16000).samples == w.samples);

    Waveform c = ResampleLinear(Make(8000, 8000, 0.3), 16000);
    CHECK(c.samples.size() == 16000);
    for (double v : c.samples) CHECK(v == doctest::Approx(0.3).epsilon(1e-15));

    Waveform sine = Make(48000, 48000);
    for (std::size_t i = 0; i < sine.samples.size(); ++i)
      sine.samples[i] = std::sin(2 * std::numbers::pi * 100.0 * i / 48000.0);
    Waveform down = ResampleLinear(sine, 16000);
    CHECK(down.sample_rate_hz == 16000);
    double worst = 0;
    for (std::size_t i = 0; i + 3 < down.samples.size(); ++i) {
      const double ref = std::sin(2 * std::numbers::pi * 100.0 * i / 16000.0);
      worst = std::max(worst, std::abs(down.samples[i] - ref));
    }
    CHECK(worst < 1e-3);
  }

  TEST_CASE("stft shape, zeros and the too-short error") {
    SpectrogramConfig cfg;
    CHECK(cfg.WindowSamples() == 400);
    CHECK(cfg.HopSamples() == 160);
    ComplexSpectrogram s = Stft(Make(96000, 16000), cfg);
    CHECK(s.frames == 598);
    CHECK(s.bins == 257);
    for (const auto &v : s.data) CHECK(v == std::complex<double>(0, 0));
    CHECK_THROWS_WITH_AS(Stft(Make(399, 16000), cfg), "too short for one frame", Error);
    CHECK(NumFrames(48000, cfg) == 1 + (48000 - 400) / 160);
  }

  TEST_CASE("stft frames match a direct DFT") {
    SpectrogramConfig cfg;
    const std::size_t n = cfg.WindowSamples() + 2 * cfg.HopSamples();  // exactly 3 frames
    Waveform w = Noise(n, 4);
    ComplexSpectrogram s = Stft(w, cfg);
    REQUIRE(s.frames == 3);
    double worst = 0;
    for (std::size_t t = 0; t < 3; ++t) {
      const auto ref = NaiveFrame(w.samples, t * cfg.HopSamples(), cfg.WindowSamples(), 512);
      for (std::size_t k = 0; k < ref.size(); ++k) worst = std::max(worst, std::abs(s.at(t, k) - ref[k]));
    }
    CHECK(worst < 1e-9);
  }

  TEST_CASE("fft falls back to direct summation for other sizes") {
    for (std::size_t n : {1u, 2u, 12u, 64u, 100u}) {
      std::vector<std::complex<double>> x(n);
      CounterRng r(n);
      for (auto &v : x) v = {r.Gaussian(), r.Gaussian()};
      std::vector<std::complex<double>> ref(n);
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < n; ++j)
          ref[k] += x[j] * std::polar(1.0, -2 * std::numbers::pi * double(k * j % n) / n);
      Fft(n).Forward(&x);
      for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(x[k] - ref[k]) < 1e-9);
    }
  }

  TEST_CASE("power compression") {
    CHECK(CompressValue(0.0, 0.3) == 0.0);
    CHECK(CompressValue(1.0, 0.3) == 1.0);
    CHECK(CompressValue(-1.0, 0.3) == -1.0);
    CHECK(CompressValue(8.0, 0.3) == doctest::Approx(std::exp(0.3 * std::log(8.0))).epsilon(1e-15));
    CHECK(CompressValue(-0.001, 0.3) ==
          doctest::Approx(-std::exp(0.3 * std::log(0.001))).epsilon(1e-15));
    CHECK(CompressValue(8.0, 0.3) == doctest::Approx(1.86606).epsilon(1e-5));
    CHECK(CompressValue(-0.001, 0.3) == doctest::Approx(-0.125893).epsilon(1e-5));

    ComplexSpectrogram s;
    s.frames = 1;
    s.bins = 2;
    s.data = {{8.0, -0.001}, {1.0, -1.0}};
    CompressedSpectrogram c = PowerCompress(s, 0.3);
    CHECK(c.data[0] == doctest::Approx(1.86606).epsilon(1e-5));
    CHECK(c.data[1] == doctest::Approx(-0.125893).epsilon(1e-5));
    CHECK(c.data[2] == 1.0f);
    CHECK(c.data[3] == -1.0f);
  }

  TEST_CASE("preprocess shapes") {
    SpectrogramConfig cfg;
    CompressedSpectrogram six = Preprocess(Make(96000, 16000), cfg);
    CHECK(six.data.shape() == Shape{598, 257, 2});
    CHECK(std::all_of(six.data.data(), six.data.data() + six.data.size(),
                      [](float v) { return v == 0.0f; }));
    SpectrogramConfig no_pad = cfg;
    no_pad.target_duration_s = 0;
    CHECK(Preprocess(Noise(48000, 5), no_pad).data.shape() == Shape{298, 257, 2});
    CHECK(Preprocess(Noise(32000, 6), cfg).data.shape() == Shape{598, 257, 2});
  }

  TEST_CASE("config validation") {
    SpectrogramConfig cfg;
    cfg.fft_size = 256;  // shorter than the 400-sample window
    CHECK_THROWS_AS(cfg.Validate(), ConfigError);
    cfg = SpectrogramConfig{};
    cfg.compression_exponent = 0;
    CHECK_THROWS_AS(cfg.Validate(), ConfigError);
  }

  TEST_CASE("wav round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "s2f_test_wav";
    std::filesystem::create_directories(dir);
    Waveform w = Noise(1000, 7);
    for (double &s : w.samples) s *= 0.2;
    WriteWav((dir / "f.wav").string(), w, WavEncoding::kFloat32);
    Waveform f = ReadWav((dir / "f.wav").string());
    REQUIRE(f.samples.size() == w.samples.size());
    CHECK(f.sample_rate_hz == 16000);
    for (std::size_t i = 0; i < w.samples.size(); ++i)
      CHECK(f.samples[i] == static_cast<double>(static_cast<float>(w.samples[i])));
    WriteWav((dir / "p.wav").string(), w, WavEncoding::kPcm16);
    Waveform p = ReadWav((dir / "p.wav").string());
    for (std::size_t i = 0; i < w.samples.size(); ++i)
      CHECK(std::abs(p.samples[i] - w.samples[i]) <= 1.0 / 32768);
    CHECK_THROWS_AS(ReadWav((dir / "missing.wav").string()), Error);
  }
}
