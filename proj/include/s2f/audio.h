// s2f/audio.h

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

// Audio frontend: waveform -> power-law compressed complex spectrogram.
//
// The chain is resample (linear) -> loop-pad to a target duration -> STFT
// (symmetric Hann window, left-aligned frames, tail zero-padding to the FFT
// size) -> sgn(x)|x|^p applied separately to the real and imaginary parts.
// With the defaults a 6 s clip at 16 kHz becomes a [598, 257, 2] tensor.

#ifndef S2F_AUDIO_H_
#define S2F_AUDIO_H_

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "s2f/tensor.h"

namespace s2f {

struct Waveform {
  std::vector<double> samples;
  int sample_rate_hz = 16000;

  /// Throws unless samples is non-empty and the rate is positive.
  void Validate() const;
  double DurationSeconds() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

struct SpectrogramConfig {
  int sample_rate_hz = 16000;
  double window_ms = 25.0;
  double hop_ms = 10.0;
  int fft_size = 512;
  double compression_exponent = 0.3;
  double target_duration_s = 6.0;  // 0 disables loop padding

  std::size_t WindowSamples() const;
  std::size_t HopSamples() const;
  std::size_t NumBins() const { return static_cast<std::size_t>(fft_size) / 2 + 1; }
  /// Throws ConfigError on a violated invariant.
  void Validate() const;
};

/// Complex STFT, frames x bins, row-major.
struct ComplexSpectrogram {
  std::size_t frames = 0, bins = 0;
  std::vector<std::complex<double>> data;

  std::complex<double> &at(std::size_t t, std::size_t f) { return data[t * bins + f]; }
  const std::complex<double> &at(std::size_t t, std::size_t f) const {
    return data[t * bins + f];
  }
};

/// [T, F, 2] tensor; channel 0 holds the compressed real part, channel 1
/// the compressed imaginary part.
struct CompressedSpectrogram {
  Tensor<float> data;

  std::size_t frames() const { return data.dim(0); }
  std::size_t bins() const { return data.dim(1); }
};

/// Cyclically repeats `w` until it reaches ceil(target * rate) samples.
/// Inputs already that long are returned unchanged.
Waveform LoopPad(const Waveform &w, double target_duration_s);

/// Linear-interpolation resampler; output length round(len * target / source).
Waveform ResampleLinear(const Waveform &w, int target_rate_hz);

/// Symmetric Hann window 0.5 (1 - cos(2 pi n / (W - 1))).
std::vector<double> HannWindow(std::size_t length);

/// Number of frames for a signal of `num_samples`: 1 + floor((L - W) / H).
std::size_t NumFrames(std::size_t num_samples, const SpectrogramConfig &cfg);

ComplexSpectrogram Stft(const Waveform &w, const SpectrogramConfig &cfg);

CompressedSpectrogram PowerCompress(const ComplexSpectrogram &spec, double exponent);

/// sgn(x) |x|^exponent.
inline double CompressValue(double x, double exponent) {
  if (x == 0.0) return 0.0;
  return x > 0 ? std::pow(x, exponent) : -std::pow(-x, exponent);
}

/// Full chain: resample to cfg.sample_rate_hz, loop-pad, STFT, compress.
CompressedSpectrogram Preprocess(const Waveform &w, const SpectrogramConfig &cfg);

/// In-place forward DFT. Power-of-two sizes use an iterative radix-2 FFT;
/// other sizes fall back to direct summation.
class Fft {
 public:
  explicit Fft(std::size_t n);
  std::size_t size() const { return n_; }
  void Forward(std::vector<std::complex<double>> *x) const;

 private:
  std::size_t n_;
  bool pow2_;
  std::vector<std::complex<double>> twiddle_;
  std::vector<std::size_t> bitrev_;
};

}  // namespace s2f

#endif  // S2F_AUDIO_H_
