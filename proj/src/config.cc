// s2f/config.cc

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

#include "s2f/config.h"

#include <charconv>
#include <fstream>
#include <sstream>

namespace s2f {
namespace {

std::string Trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T ParseNumber(const std::string &key, const std::string &v) {
  T out{};
  const char *end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end)
    throw ConfigError("bad value '" + v + "' for " + key);
  return out;
}

bool ParseBool(const std::string &key, const std::string &v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("bad boolean '" + v + "' for " + key);
}

template <typename T>
std::vector<T> ParseList(const std::string &key, const std::string &v) {
  std::vector<T> out;
  std::istringstream in(v);
  std::string tok;
  while (in >> tok) out.push_back(ParseNumber<T>(key, tok));
  return out;
}

template <typename T>
std::string JoinList(const std::vector<T> &v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += " ";
    if constexpr (std::is_floating_point_v<T>)
      s += FormatDouble(v[i]);
    else
      s += std::to_string(v[i]);
  }
  return s;
}

/// One configurable field: how to print it and how to set it.
struct Binding {
  std::string key;
  std::function<std::string()> get;
  std::function<void(const std::string &)> set;
};

template <typename T>
Binding Bind(const std::string &key, T *field) {
  Binding b;
  b.key = key;
  if constexpr (std::is_same_v<T, bool>) {
    b.get = [field] { return std::string(*field ? "true" : "false"); };
    b.set = [key, field](const std::string &v) { *field = ParseBool(key, v); };
  } else if constexpr (std::is_floating_point_v<T>) {
    b.get = [field] { return FormatDouble(*field); };
    b.set = [key, field](const std::string &v) { *field = ParseNumber<T>(key, v); };
  } else if constexpr (std::is_integral_v<T>) {
    b.get = [field] { return std::to_string(*field); };
    b.set = [key, field](const std::string &v) { *field = ParseNumber<T>(key, v); };
  } else {
    using E = typename T::value_type;
    b.get = [field] { return JoinList(*field); };
    b.set = [key, field](const std::string &v) { *field = ParseList<E>(key, v); };
  }
  return b;
}

std::vector<Binding> SynthBindings(SynthConfig *c) {
  return {
      Bind("synth.seed", &c->seed),
      Bind("synth.identities", &c->identities),
      Bind("synth.clips", &c->clips),
      Bind("synth.gallery_identities", &c->gallery_identities),
      Bind("synth.duration_s", &c->duration_s),
      Bind("synth.sample_rate_hz", &c->sample_rate_hz),
      Bind("synth.feature_dim", &c->feature_dim),
      Bind("synth.f0_min", &c->f0_min),
      Bind("synth.f0_max", &c->f0_max),
      Bind("synth.f0_gain", &c->f0_gain),
      Bind("synth.f0_jitter", &c->f0_jitter),
      Bind("synth.tilt_gain", &c->tilt_gain),
      Bind("synth.tilt_slope", &c->tilt_slope),
      Bind("synth.h1_gain", &c->h1_gain),
      Bind("synth.even_odd_gain", &c->even_odd_gain),
      Bind("synth.envelope_gain", &c->envelope_gain),
      Bind("synth.am_depth", &c->am_depth),
      Bind("synth.am_rate_min", &c->am_rate_min),
      Bind("synth.am_rate_max", &c->am_rate_max),
      Bind("synth.amplitude", &c->amplitude),
      Bind("synth.snr_db", &c->snr_db),
      Bind("synth.latent_weights", &c->latent_weights),
      Bind("synth.feature_scale", &c->feature_scale),
      Bind("synth.feature_offset", &c->feature_offset),
      Bind("synth.landmark_scale", &c->landmark_scale),
      Bind("synth.age_threshold", &c->age_threshold),
  };
}

std::vector<Binding> SpectrogramBindings(SpectrogramConfig *s) {
  return {
      Bind("spectrogram.sample_rate_hz", &s->sample_rate_hz),
      Bind("spectrogram.window_ms", &s->window_ms),
      Bind("spectrogram.hop_ms", &s->hop_ms),
      Bind("spectrogram.fft_size", &s->fft_size),
      Bind("spectrogram.compression_exponent", &s->compression_exponent),
      Bind("spectrogram.target_duration_s", &s->target_duration_s),
  };
}

std::vector<Binding> AllBindings(RunConfig *c) {
  std::vector<Binding> b = SpectrogramBindings(&c->spectrogram);
  EncoderConfig *e = &c->encoder;
  for (Binding x : {
           Bind("encoder.input_channels", &e->input_channels),
           Bind("encoder.conv_channels", &e->conv_channels),
           Bind("encoder.conv_strides", &e->conv_strides),
           Bind("encoder.kernel_t", &e->kernel_t),
           Bind("encoder.kernel_f", &e->kernel_f),
           Bind("encoder.pool_after", &e->pool_after),
           Bind("encoder.pool_kernel", &e->pool_kernel),
           Bind("encoder.pool_stride", &e->pool_stride),
           Bind("encoder.fc_widths", &e->fc_widths),
           Bind("encoder.batch_norm", &e->batch_norm),
           Bind("encoder.min_frames", &e->min_frames),
           Bind("encoder.seed", &c->encoder_seed),
           Bind("adam.beta1", &c->adam.beta1),
           Bind("adam.beta2", &c->adam.beta2),
           Bind("adam.epsilon", &c->adam.epsilon),
           Bind("adam.base_lr", &c->adam.base_lr),
           Bind("adam.decay_rate", &c->adam.decay_rate),
           Bind("adam.decay_every", &c->adam.decay_every),
           Bind("adam.batch_size", &c->adam.batch_size),
           Bind("adam.epochs", &c->adam.epochs),
           Bind("loss.lambda1", &c->loss.lambda1),
           Bind("loss.lambda2", &c->loss.lambda2),
           Bind("loss.temperature", &c->loss.temperature),
           Bind("loss.vgg_seed", &c->vgg_seed),
           Bind("loss.dec_seed", &c->dec_seed),
           Bind("train.shuffle_seed", &c->shuffle_seed),
           Bind("train.val_every", &c->val_every),
           Bind("train.checkpoint_every", &c->checkpoint_every),
           Bind("train.max_iterations", &c->max_iterations),
           Bind("eval.ks", &c->eval.ks),
           Bind("eval.collapse_identities", &c->eval.collapse_identities),
       })
    b.push_back(std::move(x));
  Binding metric;
  metric.key = "eval.metric";
  metric.get = [c] { return std::string(MetricName(c->eval.metric)); };
  metric.set = [c](const std::string &v) { c->eval.metric = ParseMetric(v); };
  b.push_back(std::move(metric));
  for (Binding x : SynthBindings(&c->synth)) b.push_back(std::move(x));
  return b;
}

}  // namespace

std::string FormatDouble(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

std::vector<KeyValue> ParseKeyValues(const std::string &text, const std::string &origin) {
  std::vector<KeyValue> out;
  std::istringstream in(text);
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(n);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    KeyValue kv{Trim(line.substr(0, eq)), Trim(line.substr(eq + 1)), where};
    if (kv.key.empty()) throw ConfigError(where + ": empty key");
    out.push_back(std::move(kv));
  }
  return out;
}

std::vector<KeyValue> LoadKeyValues(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream s;
  s << in.rdbuf();
  return ParseKeyValues(s.str(), path);
}

void RunConfig::Set(const std::string &key, const std::string &value) {
  for (Binding &b : AllBindings(this))
    if (b.key == key) {
      b.set(value);
      return;
    }
  throw ConfigError("unknown config key '" + key + "'");
}

void RunConfig::Apply(const std::vector<KeyValue> &layer) {
  for (const KeyValue &kv : layer) {
    try {
      Set(kv.key, kv.value);
    } catch (const ConfigError &e) {
      throw ConfigError(kv.origin + ": " + e.what());
    }
  }
}

std::vector<std::pair<std::string, std::string>> RunConfig::Entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const Binding &b : AllBindings(const_cast<RunConfig *>(this)))
    out.emplace_back(b.key, b.get());
  return out;
}

std::string RunConfig::ToText() const {
  std::string s;
  for (const auto &[k, v] : Entries()) s += k + " = " + v + "\n";
  return s;
}

uint64_t RunConfig::Hash() const { return Fnv1a64(ToText()); }

uint64_t RunConfig::FrontendHash() const {
  std::string s;
  for (const Binding &b : SpectrogramBindings(const_cast<SpectrogramConfig *>(&spectrogram)))
    if (b.key != "spectrogram.target_duration_s") s += b.key + " = " + b.get() + "\n";
  return Fnv1a64(s);
}

void RunConfig::Validate() const {
  spectrogram.Validate();
  encoder.Validate();
  adam.Validate();
  loss.Validate();
  synth.Validate();
  if (eval.ks.empty()) throw ConfigError("eval.ks must list at least one K");
  if (encoder.fc_widths.back() != synth.feature_dim)
    throw ConfigError("encoder output width " + std::to_string(encoder.fc_widths.back()) +
                      " differs from synth.feature_dim " + std::to_string(synth.feature_dim));
}

std::vector<std::pair<std::string, std::string>> SynthEntries(const SynthConfig &cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const Binding &b : SynthBindings(const_cast<SynthConfig *>(&cfg)))
    out.emplace_back(b.key, b.get());
  return out;
}

bool SetSynthKey(SynthConfig *cfg, const std::string &key, const std::string &value) {
  for (Binding &b : SynthBindings(cfg))
    if (b.key == key) {
      b.set(value);
      return true;
    }
  return false;
}

}  // namespace s2f
