// s2f/encoder.h

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

// Voice encoder: compressed spectrogram -> 4096-D face feature.
//
// Layer order for the default table:
//   conv 64, conv 64, conv 128, maxpool, conv 128, maxpool, conv 128,
//   maxpool, conv 256, maxpool, conv 512, conv 512 /2, conv 512 /2,
//   avgpool(all time), fc 4096, fc 4096
// Every conv but the last is followed by ReLU then BN. The avgpool is
// followed by ReLU then BN, the first FC by ReLU. Maxpools are 2x1 and act
// on time only.
//
// Convolutions use "same" padding: output extent ceil(in / stride), the
// required total padding split with the larger half before the signal. For
// 4x4 kernels that is 2 before and 1 after on both axes, which takes the
// frequency axis 257 -> 129 -> 65 through the two strided convs.

#ifndef S2F_ENCODER_H_
#define S2F_ENCODER_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "s2f/audio.h"
#include "s2f/ops.h"

namespace s2f {

struct EncoderConfig {
  std::size_t input_channels = 2;
  std::vector<std::size_t> conv_channels{64, 64, 128, 128, 128, 256, 512, 512, 512};
  std::vector<std::size_t> conv_strides{1, 1, 1, 1, 1, 1, 1, 2, 2};
  std::size_t kernel_t = 4, kernel_f = 4;
  std::vector<std::size_t> pool_after{3, 4, 5, 6};  // 1-based conv indices
  std::size_t pool_kernel = 2, pool_stride = 2;
  std::vector<std::size_t> fc_widths{4096, 4096};
  bool batch_norm = true;
  std::size_t min_frames = 64;

  /// Throws ConfigError when the table is inconsistent.
  void Validate() const;
  std::size_t num_convs() const { return conv_channels.size(); }
  std::size_t output_dim() const { return fc_widths.back(); }
  bool PoolAfter(std::size_t conv_index) const;  // 0-based
  /// Same-style padding for conv `i` on an axis of extent `in`.
  std::pair<std::size_t, std::size_t> Padding(std::size_t in, std::size_t kernel,
                                              std::size_t stride) const;
};

struct LayerShape {
  std::string name;
  std::size_t channels, time, freq;
  std::size_t pad_t0 = 0, pad_t1 = 0, pad_f0 = 0, pad_f1 = 0;
};

/// Symbolic (C, T, F) after every layer. Extents that vanish show up as 0;
/// ShapeTrace itself never throws for short inputs.
std::vector<LayerShape> ShapeTrace(const EncoderConfig &cfg, std::size_t time,
                                   std::size_t freq);

/// Width of the first FC input for a given frequency extent.
std::size_t FlattenWidth(const EncoderConfig &cfg, std::size_t freq);

template <typename Real>
struct EncoderParams {
  EncoderConfig config;
  uint64_t seed = 0;
  std::size_t input_freq = 0;
  std::vector<Tensor<Real>> conv_w, conv_b;        // [K,C,kh,kw], [K]
  std::vector<BatchNormState<Real>> bn;             // one per ReLU+BN site
  std::vector<Tensor<Real>> fc_w, fc_b;             // [D,D'], [D']

  /// Learnable tensors in a fixed order with stable names.
  std::vector<std::pair<std::string, Tensor<Real> *>> Trainable();
  std::vector<std::pair<std::string, const Tensor<Real> *>> Trainable() const;
  /// Trainable tensors plus BN running statistics.
  std::vector<std::pair<std::string, const Tensor<Real> *>> AllTensors() const;
  std::vector<std::pair<std::string, Tensor<Real> *>> AllTensors();

  std::size_t NumParameters() const;

  template <typename Other>
  EncoderParams<Other> Cast() const;
};

/// He-style initialisation (std sqrt(2 / fan_in)), zero biases, BN at
/// gamma 1, beta 0, running (0, 1). Deterministic in `seed`.
template <typename Real>
EncoderParams<Real> BuildEncoder(const EncoderConfig &cfg, std::size_t input_freq,
                                 uint64_t seed);

/// [T,F,2] spectrograms -> [N,2,T,F]; all inputs must share a shape.
Tensor<float> StackSpectrograms(const std::vector<const CompressedSpectrogram *> &specs);

struct EncoderGraph {
  Var output;                // [N, 4096]
  std::vector<Var> params;   // aligned with EncoderParams::Trainable()
};

/// Records the encoder on `tape`. In train mode BN uses batch statistics
/// and updates running statistics in `params`.
template <typename Real>
EncoderGraph EncoderForward(Tape<Real> &tape, EncoderParams<Real> &params, Var input,
                            Mode mode);

/// Eval-mode inference without gradients. Thread-compatible for shared params.
template <typename Real>
Tensor<Real> Encode(const EncoderParams<Real> &params, const Tensor<Real> &batch);

}  // namespace s2f

#endif  // S2F_ENCODER_H_
