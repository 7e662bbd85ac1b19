// s2f/encoder.cc

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

#include "s2f/encoder.h"

#include <algorithm>
#include <cmath>

namespace s2f {

void EncoderConfig::Validate() const {
  if (input_channels == 0) throw ConfigError("encoder: input_channels must be positive");
  if (conv_channels.empty()) throw ConfigError("encoder: at least one conv layer required");
  if (conv_strides.size() != conv_channels.size())
    throw ConfigError("encoder: conv_strides has " + std::to_string(conv_strides.size()) +
                      " entries, conv_channels has " + std::to_string(conv_channels.size()));
  for (std::size_t c : conv_channels)
    if (c == 0) throw ConfigError("encoder: conv channel count must be positive");
  for (std::size_t s : conv_strides)
    if (s == 0) throw ConfigError("encoder: conv stride must be positive");
  if (kernel_t == 0 || kernel_f == 0) throw ConfigError("encoder: kernel must be positive");
  for (std::size_t p : pool_after)
    if (p == 0 || p > conv_channels.size())
      throw ConfigError("encoder: pool_after index " + std::to_string(p) + " out of range");
  if (pool_kernel == 0 || pool_stride == 0) throw ConfigError("encoder: bad pool geometry");
  if (fc_widths.empty()) throw ConfigError("encoder: at least one FC layer required");
  for (std::size_t w : fc_widths)
    if (w == 0) throw ConfigError("encoder: FC width must be positive");
}

bool EncoderConfig::PoolAfter(std::size_t conv_index) const {
  return std::find(pool_after.begin(), pool_after.end(), conv_index + 1) != pool_after.end();
}

std::pair<std::size_t, std::size_t> EncoderConfig::Padding(std::size_t in, std::size_t kernel,
                                                           std::size_t stride) const {
  if (in == 0) return {0, 0};
  const std::size_t out = (in + stride - 1) / stride;
  const std::size_t need = (out - 1) * stride + kernel;
  const std::size_t total = need > in ? need - in : 0;
  return {(total + 1) / 2, total / 2};
}

std::vector<LayerShape> ShapeTrace(const EncoderConfig &cfg, std::size_t time,
                                   std::size_t freq) {
  cfg.Validate();
  std::vector<LayerShape> out;
  out.push_back({"input", cfg.input_channels, time, freq});
  std::size_t t = time, f = freq;
  for (std::size_t i = 0; i < cfg.num_convs(); ++i) {
    const std::size_t s = cfg.conv_strides[i];
    const auto [pt0, pt1] = cfg.Padding(t, cfg.kernel_t, s);
    const auto [pf0, pf1] = cfg.Padding(f, cfg.kernel_f, s);
    t = t == 0 ? 0 : ConvOutputExtent(t, pt0, pt1, cfg.kernel_t, s);
    f = f == 0 ? 0 : ConvOutputExtent(f, pf0, pf1, cfg.kernel_f, s);
    out.push_back({"conv" + std::to_string(i + 1), cfg.conv_channels[i], t, f, pt0, pt1, pf0, pf1});
    if (cfg.PoolAfter(i)) {
      t = ConvOutputExtent(t, 0, 0, cfg.pool_kernel, cfg.pool_stride);
      out.push_back({"maxpool" + std::to_string(i + 1), cfg.conv_channels[i], t, f});
    }
  }
  const std::size_t c = cfg.conv_channels.back();
  out.push_back({"avgpool", c, std::size_t{t == 0 ? 0u : 1u}, f});
  out.push_back({"flatten", c * f, 1, 1});
  for (std::size_t j = 0; j < cfg.fc_widths.size(); ++j)
    out.push_back({"fc" + std::to_string(j + 1), cfg.fc_widths[j], 1, 1});
  return out;
}

std::size_t FlattenWidth(const EncoderConfig &cfg, std::size_t freq) {
  for (const LayerShape &l : ShapeTrace(cfg, cfg.min_frames, freq))
    if (l.name == "flatten") return l.channels;
  throw Error("encoder: no flatten layer");
}

namespace {

std::size_t NumBnSites(const EncoderConfig &cfg) {
  return cfg.batch_norm ? cfg.num_convs() : 0;  // all convs but the last, plus avgpool
}

std::string BnName(const EncoderConfig &cfg, std::size_t k) {
  return k + 1 == cfg.num_convs() ? std::string("bn_pool") : "bn" + std::to_string(k + 1);
}

}  // namespace

template <typename Real>
std::vector<std::pair<std::string, Tensor<Real> *>> EncoderParams<Real>::Trainable() {
  std::vector<std::pair<std::string, Tensor<Real> *>> out;
  for (std::size_t i = 0; i < conv_w.size(); ++i) {
    out.emplace_back("conv" + std::to_string(i + 1) + ".w", &conv_w[i]);
    out.emplace_back("conv" + std::to_string(i + 1) + ".b", &conv_b[i]);
  }
  for (std::size_t k = 0; k < bn.size(); ++k) {
    out.emplace_back(BnName(config, k) + ".gamma", &bn[k].gamma);
    out.emplace_back(BnName(config, k) + ".beta", &bn[k].beta);
  }
  for (std::size_t j = 0; j < fc_w.size(); ++j) {
    out.emplace_back("fc" + std::to_string(j + 1) + ".w", &fc_w[j]);
    out.emplace_back("fc" + std::to_string(j + 1) + ".b", &fc_b[j]);
  }
  return out;
}

template <typename Real>
std::vector<std::pair<std::string, const Tensor<Real> *>> EncoderParams<Real>::Trainable()
    const {
  std::vector<std::pair<std::string, const Tensor<Real> *>> out;
  for (auto &[name, t] : const_cast<EncoderParams *>(this)->Trainable()) out.emplace_back(name, t);
  return out;
}

template <typename Real>
std::vector<std::pair<std::string, Tensor<Real> *>> EncoderParams<Real>::AllTensors() {
  auto out = Trainable();
  for (std::size_t k = 0; k < bn.size(); ++k) {
    out.emplace_back(BnName(config, k) + ".running_mean", &bn[k].running_mean);
    out.emplace_back(BnName(config, k) + ".running_var", &bn[k].running_var);
  }
  return out;
}

template <typename Real>
std::vector<std::pair<std::string, const Tensor<Real> *>> EncoderParams<Real>::AllTensors()
    const {
  std::vector<std::pair<std::string, const Tensor<Real> *>> out;
  for (auto &[name, t] : const_cast<EncoderParams *>(this)->AllTensors()) out.emplace_back(name, t);
  return out;
}

template <typename Real>
std::size_t EncoderParams<Real>::NumParameters() const {
  std::size_t n = 0;
  for (const auto &p : Trainable()) n += p.second->size();
  return n;
}

template <typename Real>
template <typename Other>
EncoderParams<Other> EncoderParams<Real>::Cast() const {
  EncoderParams<Other> out;
  out.config = config;
  out.seed = seed;
  out.input_freq = input_freq;
  for (const auto &t : conv_w) out.conv_w.push_back(t.template Cast<Other>());
  for (const auto &t : conv_b) out.conv_b.push_back(t.template Cast<Other>());
  for (const auto &t : fc_w) out.fc_w.push_back(t.template Cast<Other>());
  for (const auto &t : fc_b) out.fc_b.push_back(t.template Cast<Other>());
  for (const auto &s : bn) {
    BatchNormState<Other> o;
    o.gamma = s.gamma.template Cast<Other>();
    o.beta = s.beta.template Cast<Other>();
    o.running_mean = s.running_mean.template Cast<Other>();
    o.running_var = s.running_var.template Cast<Other>();
    o.momentum = s.momentum;
    o.epsilon = s.epsilon;
    out.bn.push_back(std::move(o));
  }
  return out;
}

template <typename Real>
EncoderParams<Real> BuildEncoder(const EncoderConfig &cfg, std::size_t input_freq,
                                 uint64_t seed) {
  cfg.Validate();
  EncoderParams<Real> p;
  p.config = cfg;
  p.seed = seed;
  p.input_freq = input_freq;
  // Every tensor draws from its own stream keyed on its name, so adding a
  // layer does not perturb the others.
  auto init = [seed](Tensor<Real> *t, const std::string &name, std::size_t fan_in) {
    CounterRng rng(seed, Fnv1a64(name));
    FillGaussian(t, &rng, std::sqrt(2.0 / static_cast<double>(fan_in)));
  };
  std::size_t cin = cfg.input_channels;
  for (std::size_t i = 0; i < cfg.num_convs(); ++i) {
    const std::size_t k = cfg.conv_channels[i];
    p.conv_w.emplace_back(Shape{k, cin, cfg.kernel_t, cfg.kernel_f});
    p.conv_b.emplace_back(Shape{k});
    init(&p.conv_w.back(), "conv" + std::to_string(i + 1) + ".w", cin * cfg.kernel_t * cfg.kernel_f);
    cin = k;
  }
  for (std::size_t k = 0; k < NumBnSites(cfg); ++k) p.bn.emplace_back(cfg.conv_channels[k]);
  std::size_t d = FlattenWidth(cfg, input_freq);
  for (std::size_t j = 0; j < cfg.fc_widths.size(); ++j) {
    p.fc_w.emplace_back(Shape{d, cfg.fc_widths[j]});
    p.fc_b.emplace_back(Shape{cfg.fc_widths[j]});
    init(&p.fc_w.back(), "fc" + std::to_string(j + 1) + ".w", d);
    d = cfg.fc_widths[j];
  }
  return p;
}

Tensor<float> StackSpectrograms(const std::vector<const CompressedSpectrogram *> &specs) {
  if (specs.empty()) throw Error("empty batch");
  const std::size_t T = specs[0]->frames(), F = specs[0]->bins();
  Tensor<float> out({specs.size(), 2, T, F});
  for (std::size_t n = 0; n < specs.size(); ++n) {
    const Tensor<float> &s = specs[n]->data;
    if (s.shape() != specs[0]->data.shape())
      throw Error("batch spectrograms differ in shape: " + ShapeString(s.shape()) + " vs " +
                  ShapeString(specs[0]->data.shape()));
    const float *src = s.data();
    float *re = out.ptr(n, 0, 0, 0), *im = out.ptr(n, 1, 0, 0);
    for (std::size_t i = 0; i < T * F; ++i) {
      re[i] = src[2 * i];
      im[i] = src[2 * i + 1];
    }
  }
  return out;
}

template <typename Real>
EncoderGraph EncoderForward(Tape<Real> &tape, EncoderParams<Real> &params, Var input,
                            Mode mode) {
  const EncoderConfig &cfg = params.config;
  const Tensor<Real> &x0 = tape.value(input);
  if (x0.rank() != 4 || x0.dim(1) != cfg.input_channels)
    throw Error("encoder: expected input [N," + std::to_string(cfg.input_channels) +
                ",T,F], got " + ShapeString(x0.shape()));
  if (x0.dim(3) != params.input_freq)
    throw Error("encoder: input has " + std::to_string(x0.dim(3)) +
                " frequency bins, parameters were built for " +
                std::to_string(params.input_freq));
  const std::vector<LayerShape> trace = ShapeTrace(cfg, x0.dim(2), x0.dim(3));
  for (const LayerShape &l : trace)
    if (l.time == 0 || l.freq == 0)
      throw Error("encoder: input of " + std::to_string(x0.dim(2)) +
                  " frames is too short; time axis vanishes at " + l.name);
  if (x0.dim(2) < cfg.min_frames)
    throw Error("encoder: input of " + std::to_string(x0.dim(2)) +
                " frames is shorter than the minimum of " + std::to_string(cfg.min_frames));

  EncoderGraph g;
  auto watch = [&](Tensor<Real> &t) {
    Var v = mode == Mode::kTrain ? tape.Watch(t) : tape.Borrow(t);
    g.params.push_back(v);
    return v;
  };
  // Watch in Trainable() order: conv pairs, BN pairs, FC pairs.
  std::vector<Var> cw, cb, bg, bb, fw, fb;
  for (std::size_t i = 0; i < cfg.num_convs(); ++i) {
    cw.push_back(watch(params.conv_w[i]));
    cb.push_back(watch(params.conv_b[i]));
  }
  for (auto &s : params.bn) {
    bg.push_back(watch(s.gamma));
    bb.push_back(watch(s.beta));
  }
  for (std::size_t j = 0; j < cfg.fc_widths.size(); ++j) {
    fw.push_back(watch(params.fc_w[j]));
    fb.push_back(watch(params.fc_b[j]));
  }

  Var h = input;
  std::size_t trace_pos = 1;
  for (std::size_t i = 0; i < cfg.num_convs(); ++i) {
    const LayerShape &l = trace[trace_pos++];
    Conv2dGeometry geom;
    geom.stride_t = geom.stride_f = cfg.conv_strides[i];
    geom.pad_t0 = l.pad_t0;
    geom.pad_t1 = l.pad_t1;
    geom.pad_f0 = l.pad_f0;
    geom.pad_f1 = l.pad_f1;
    h = Conv2d(tape, h, cw[i], cb[i], geom);
    if (i + 1 < cfg.num_convs()) {
      h = Relu(tape, h);
      if (cfg.batch_norm) h = BatchNorm(tape, h, bg[i], bb[i], &params.bn[i], mode);
    }
    if (cfg.PoolAfter(i)) {
      h = MaxPoolTime(tape, h, cfg.pool_kernel, cfg.pool_stride);
      ++trace_pos;
    }
  }
  h = AvgPoolAllTime(tape, h);
  h = Relu(tape, h);
  if (cfg.batch_norm) {
    const std::size_t k = cfg.num_convs() - 1;
    h = BatchNorm(tape, h, bg[k], bb[k], &params.bn[k], mode);
  }
  const Tensor<Real> &pooled = tape.value(h);
  h = Reshape(tape, h, {pooled.dim(0), pooled.size() / pooled.dim(0)});
  for (std::size_t j = 0; j < cfg.fc_widths.size(); ++j) {
    h = Linear(tape, h, fw[j], fb[j]);
    if (j + 1 < cfg.fc_widths.size()) h = Relu(tape, h);
  }
  g.output = h;
  return g;
}

template <typename Real>
Tensor<Real> Encode(const EncoderParams<Real> &params, const Tensor<Real> &batch) {
  Tape<Real> tape;
  // Eval mode reads BN state but never writes it.
  auto &mut = const_cast<EncoderParams<Real> &>(params);
  EncoderGraph g = EncoderForward(tape, mut, tape.Borrow(batch), Mode::kEval);
  return tape.value(g.output);
}

#define S2F_INSTANTIATE_ENCODER(Real)                                                    \
  template struct EncoderParams<Real>;                                                   \
  template EncoderParams<Real> BuildEncoder<Real>(const EncoderConfig &, std::size_t,    \
                                                  uint64_t);                             \
  template EncoderGraph EncoderForward(Tape<Real> &, EncoderParams<Real> &, Var, Mode);  \
  template Tensor<Real> Encode(const EncoderParams<Real> &, const Tensor<Real> &);

S2F_INSTANTIATE_ENCODER(float)
S2F_INSTANTIATE_ENCODER(double)
template EncoderParams<double> EncoderParams<float>::Cast<double>() const;
template EncoderParams<float> EncoderParams<double>::Cast<float>() const;

#undef S2F_INSTANTIATE_ENCODER

}  // namespace s2f
