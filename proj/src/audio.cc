// s2f/audio.cc

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

#include "s2f/audio.h"

#include <cmath>
#include <numbers>

namespace s2f {

void Waveform::Validate() const {
  if (samples.empty()) throw Error("empty input");
  if (sample_rate_hz <= 0)
    throw Error("sample rate must be positive, got " + std::to_string(sample_rate_hz));
}

std::size_t SpectrogramConfig::WindowSamples() const {
  return static_cast<std::size_t>(std::llround(window_ms * sample_rate_hz / 1000.0));
}

std::size_t SpectrogramConfig::HopSamples() const {
  return static_cast<std::size_t>(std::llround(hop_ms * sample_rate_hz / 1000.0));
}

void SpectrogramConfig::Validate() const {
  if (sample_rate_hz <= 0) throw ConfigError("sample_rate_hz must be positive");
  if (fft_size < 2) throw ConfigError("fft_size must be at least 2");
  if (window_ms <= 0 || WindowSamples() < 2)
    throw ConfigError("window must span at least 2 samples");
  if (WindowSamples() > static_cast<std::size_t>(fft_size))
    throw ConfigError("window of " + std::to_string(WindowSamples()) +
                      " samples exceeds fft_size " + std::to_string(fft_size));
  if (hop_ms <= 0 || HopSamples() < 1) throw ConfigError("hop must be at least 1 sample");
  if (!(compression_exponent > 0.0 && compression_exponent <= 1.0))
    throw ConfigError("compression_exponent must lie in (0, 1]");
  if (target_duration_s < 0) throw ConfigError("target_duration_s must be non-negative");
}

Waveform LoopPad(const Waveform &w, double target_duration_s) {
  if (w.samples.empty()) throw Error("empty input");
  w.Validate();
  const auto target = static_cast<std::size_t>(
      std::ceil(target_duration_s * w.sample_rate_hz - 1e-9));
  if (w.samples.size() >= target) return w;
  Waveform out;
  out.sample_rate_hz = w.sample_rate_hz;
  out.samples.resize(target);
  const std::size_t n = w.samples.size();
  for (std::size_t i = 0; i < target; ++i) out.samples[i] = w.samples[i % n];
  return out;
}

Waveform ResampleLinear(const Waveform &w, int target_rate_hz) {
  w.Validate();
  if (target_rate_hz <= 0) throw Error("target sample rate must be positive");
  if (target_rate_hz == w.sample_rate_hz) return w;
  const std::size_t n_in = w.samples.size();
  const double ratio = static_cast<double>(w.sample_rate_hz) / target_rate_hz;
  auto n_out = static_cast<std::size_t>(
      std::llround(static_cast<double>(n_in) * target_rate_hz / w.sample_rate_hz));
  n_out = std::max<std::size_t>(n_out, 1);
  Waveform out;
  out.sample_rate_hz = target_rate_hz;
  out.samples.resize(n_out);
  for (std::size_t i = 0; i < n_out; ++i) {
    const double pos = static_cast<double>(i) * ratio;
    auto j = static_cast<std::size_t>(pos);
    if (j >= n_in - 1) {
      out.samples[i] = w.samples[n_in - 1];
      continue;
    }
    const double frac = pos - static_cast<double>(j);
    out.samples[i] = w.samples[j] + frac * (w.samples[j + 1] - w.samples[j]);
  }
  return out;
}

std::vector<double> HannWindow(std::size_t length) {
  if (length < 2) throw Error("Hann window needs at least 2 samples");
  std::vector<double> win(length);
  const double denom = static_cast<double>(length - 1);
  for (std::size_t n = 0; n < length; ++n)
    win[n] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * n / denom));
  return win;
}

std::size_t NumFrames(std::size_t num_samples, const SpectrogramConfig &cfg) {
  const std::size_t win = cfg.WindowSamples();
  if (num_samples < win) return 0;
  return 1 + (num_samples - win) / cfg.HopSamples();
}

Fft::Fft(std::size_t n) : n_(n), pow2_(n > 0 && (n & (n - 1)) == 0) {
  if (n == 0) throw Error("FFT size must be positive");
  if (!pow2_) return;
  twiddle_.resize(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k)
    twiddle_[k] = std::polar(1.0, -2.0 * std::numbers::pi * k / n);
  bitrev_.resize(n);
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < n) ++bits;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < bits; ++b)
      if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
    bitrev_[i] = r;
  }
}

void Fft::Forward(std::vector<std::complex<double>> *x) const {
  auto &a = *x;
  if (a.size() != n_) throw Error("FFT input length mismatch");
  if (!pow2_) {
    std::vector<std::complex<double>> out(n_);
    for (std::size_t k = 0; k < n_; ++k) {
      std::complex<double> acc = 0;
      for (std::size_t j = 0; j < n_; ++j)
        acc += a[j] * std::polar(1.0, -2.0 * std::numbers::pi *
                                          static_cast<double>((k * j) % n_) / n_);
      out[k] = acc;
    }
    a.swap(out);
    return;
  }
  for (std::size_t i = 0; i < n_; ++i)
    if (i < bitrev_[i]) std::swap(a[i], a[bitrev_[i]]);
  for (std::size_t len = 2; len <= n_; len <<= 1) {
    const std::size_t half = len / 2, step = n_ / len;
    for (std::size_t s = 0; s < n_; s += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const std::complex<double> t = twiddle_[k * step] * a[s + k + half];
        a[s + k + half] = a[s + k] - t;
        a[s + k] += t;
      }
    }
  }
}

ComplexSpectrogram Stft(const Waveform &w, const SpectrogramConfig &cfg) {
  w.Validate();
  cfg.Validate();
  const std::size_t win = cfg.WindowSamples(), hop = cfg.HopSamples();
  const auto nfft = static_cast<std::size_t>(cfg.fft_size);
  if (w.samples.size() < win) throw Error("too short for one frame");
  const std::vector<double> hann = HannWindow(win);
  const Fft fft(nfft);

  ComplexSpectrogram spec;
  spec.frames = NumFrames(w.samples.size(), cfg);
  spec.bins = cfg.NumBins();
  spec.data.resize(spec.frames * spec.bins);
  std::vector<std::complex<double>> buf(nfft);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    const double *frame = w.samples.data() + t * hop;
    for (std::size_t n = 0; n < win; ++n) buf[n] = frame[n] * hann[n];
    std::fill(buf.begin() + static_cast<std::ptrdiff_t>(win), buf.end(), 0.0);
    fft.Forward(&buf);
    std::copy(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(spec.bins),
              spec.data.begin() + static_cast<std::ptrdiff_t>(t * spec.bins));
  }
  return spec;
}

CompressedSpectrogram PowerCompress(const ComplexSpectrogram &spec, double exponent) {
  if (!(exponent > 0.0 && exponent <= 1.0))
    throw Error("compression exponent must lie in (0, 1]");
  CompressedSpectrogram out;
  out.data = Tensor<float>({spec.frames, spec.bins, 2});
  float *o = out.data.data();
  for (std::size_t i = 0; i < spec.data.size(); ++i) {
    o[2 * i] = static_cast<float>(CompressValue(spec.data[i].real(), exponent));
    o[2 * i + 1] = static_cast<float>(CompressValue(spec.data[i].imag(), exponent));
  }
  if (!out.data.AllFinite()) throw Error("non-finite spectrogram value");
  return out;
}

CompressedSpectrogram Preprocess(const Waveform &w, const SpectrogramConfig &cfg) {
  cfg.Validate();
  Waveform x = ResampleLinear(w, cfg.sample_rate_hz);
  if (cfg.target_duration_s > 0) x = LoopPad(x, cfg.target_duration_s);
  return PowerCompress(Stft(x, cfg), cfg.compression_exponent);
}

}  // namespace s2f
