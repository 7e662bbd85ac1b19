// s2f/config.h

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

// Run configuration.
//
// Config files hold "section.key = value" lines; '#' starts a comment and
// list values are space-separated. Layers apply in order (built-in
// defaults, then each --config file, then command-line overrides) and a
// later layer replaces earlier values key by key. Unknown keys are errors.

#ifndef S2F_CONFIG_H_
#define S2F_CONFIG_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "s2f/audio.h"
#include "s2f/encoder.h"
#include "s2f/evaluation.h"
#include "s2f/loss.h"
#include "s2f/synth.h"
#include "s2f/trainer.h"

namespace s2f {

struct KeyValue {
  std::string key, value, origin;  // origin is "file:line" or "override"
};

/// Parses config text; malformed lines throw ConfigError naming the origin.
std::vector<KeyValue> ParseKeyValues(const std::string &text, const std::string &origin);
std::vector<KeyValue> LoadKeyValues(const std::string &path);

struct EvalConfig {
  Metric metric = Metric::kCosine;
  std::vector<std::size_t> ks{1, 2, 5, 10};
  std::size_t collapse_identities = 50;  // for the pairwise-angle statistic
};

struct RunConfig {
  SpectrogramConfig spectrogram;
  EncoderConfig encoder;
  AdamConfig adam;
  LossWeights loss;
  SynthConfig synth;
  EvalConfig eval;
  uint64_t encoder_seed = 1;
  uint64_t shuffle_seed = 1;
  uint64_t vgg_seed = 11;
  uint64_t dec_seed = 13;
  uint64_t val_every = 500;
  uint64_t checkpoint_every = 0;
  uint64_t max_iterations = 0;

  /// Applies one layer; throws ConfigError on an unknown key or bad value.
  void Apply(const std::vector<KeyValue> &layer);
  void Set(const std::string &key, const std::string &value);
  /// Every key in canonical order, one "key = value" per line.
  std::string ToText() const;
  std::vector<std::pair<std::string, std::string>> Entries() const;
  uint64_t Hash() const;
  /// Hash of the spectrogram keys other than the clip duration, so caches
  /// made at another duration remain usable with the same model.
  uint64_t FrontendHash() const;
  void Validate() const;
};

/// Canonical "synth.*" entries of a synthetic-corpus config.
std::vector<std::pair<std::string, std::string>> SynthEntries(const SynthConfig &cfg);
/// Applies one "synth.*" key; returns false if the key is not a synth key.
bool SetSynthKey(SynthConfig *cfg, const std::string &key, const std::string &value);

/// Shortest round-trip decimal form.
std::string FormatDouble(double v);

}  // namespace s2f

#endif  // S2F_CONFIG_H_
