// s2f/synth.h

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

// Synthetic paired corpus with a shared identity latent z ~ N(0, I_16).
//
// Voice: 8 harmonics of f0 = f0_min + (f0_max - f0_min) sigmoid(f0_gain z0),
// with log amplitudes
//   log a_h = -rho ln h + h1_gain z2 [h = 1] + even_odd_gain z3 (+1 even, -1 odd)
//             + envelope_gain (M z[4:8])_h,     rho = 1 + tilt_gain tanh(tilt_slope z1)
// for a fixed seeded 8x4 matrix M. Each clip adds a small f0 jitter, random
// harmonic phases, slow amplitude modulation and white noise at snr_db.
//
// Face side: v_f = A z + b, with A's column j drawn N(0, 1) and scaled by
// latent_weights[j] / |latent_weights| * feature_scale, and b drawn
// N(0, feature_offset^2 feature_scale^2). Landmarks are a 68-point template
// plus a seeded linear map of z.

#ifndef S2F_SYNTH_H_
#define S2F_SYNTH_H_

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "s2f/audio.h"
#include "s2f/dataset.h"
#include "s2f/evaluation.h"

namespace s2f {

struct SynthConfig {
  uint64_t seed = 7;
  std::size_t identities = 200;
  std::size_t clips = 10;
  std::size_t gallery_identities = 100;  // extra held-out identities, one clip each
  double duration_s = 6.0;
  int sample_rate_hz = 16000;
  std::size_t feature_dim = 4096;

  double f0_min = 80, f0_max = 300, f0_gain = 1.2, f0_jitter = 0.01;
  double tilt_gain = 0.6, tilt_slope = 0.8;
  double h1_gain = 0.9, even_odd_gain = 0.6, envelope_gain = 0.2;
  double am_depth = 0.3, am_rate_min = 2, am_rate_max = 6;
  double amplitude = 0.1, snr_db = 20;

  std::vector<double> latent_weights{2, 1, 1, 1, 0.4, 0.4, 0.4, 0.4,
                                     0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1};
  double feature_scale = 4.0, feature_offset = 2.0;
  double landmark_scale = 3.0;  // pixels per unit of z
  double age_threshold = 0.4307;  // standard-normal tertile boundary

  void Validate() const;
};

constexpr std::size_t kLatentDim = 16;
constexpr std::size_t kNumHarmonics = 8;
using Latent = std::array<double, kLatentDim>;

enum class Split { kTrain, kVal, kTest, kGallery };
const char *SplitName(Split s);
Split ParseSplit(const std::string &name);

/// Fixed maps shared by every sample of a corpus seed.
class SynthWorld {
 public:
  explicit SynthWorld(const SynthConfig &cfg);

  const SynthConfig &config() const { return cfg_; }
  Latent LatentOf(int64_t identity) const;
  std::vector<float> Feature(const Latent &z) const;
  LandmarkSet Landmarks(const Latent &z) const;
  std::map<std::string, std::string> Attributes(const Latent &z) const;

  double F0(const Latent &z) const;
  /// Harmonic amplitudes before the global amplitude and modulation.
  std::array<double, kNumHarmonics> HarmonicAmplitudes(const Latent &z) const;
  Waveform RenderVoice(const Latent &z, int64_t identity, int64_t clip,
                       double duration_s) const;

  /// Identity-disjoint 80/10/10 split of [0, identities); gallery ids follow.
  std::vector<int64_t> Identities(Split s) const;
  /// Column j of A (the weights of latent j in the feature map), length D.
  std::vector<double> FeatureColumn(std::size_t j) const;
  /// Least-squares latent of a feature: argmin_z |A z + b - v|.
  Latent DecodeLatent(const std::vector<float> &v) const;

 private:
  SynthConfig cfg_;
  std::vector<double> a_;  // [D, 16]
  std::vector<double> b_;  // [D]
  std::array<std::array<double, 4>, kNumHarmonics> m_;
  std::vector<double> landmark_map_;  // [136, 16]
  std::vector<double> pinv_;          // [16, D], (A^T A)^-1 A^T
};

/// Canonical 68-point frontal face (iBUG ordering) in a 256 px frame.
LandmarkSet TemplateLandmarks();

/// Examples rendered and preprocessed on demand; nothing is cached.
class SynthDataset : public Dataset {
 public:
  SynthDataset(const SynthWorld &world, Split split, std::size_t clips_per_identity,
               SpectrogramConfig spec_cfg, double duration_s);
  std::size_t size() const override { return items_.size(); }
  Example Get(std::size_t i) const override;
  std::vector<float> Target(std::size_t i) const override;
  int64_t Identity(std::size_t i) const override { return items_.at(i).first; }
  Waveform Audio(std::size_t i) const;

 private:
  const SynthWorld &world_;
  std::vector<std::pair<int64_t, int64_t>> items_;  // (identity, clip)
  SpectrogramConfig spec_cfg_;
  double duration_s_;
};

struct ManifestEntry {
  int64_t identity = 0, clip = 0;
  Split split = Split::kTrain;
  std::string wav;  // relative to the corpus directory
};

/// On-disk corpus description. Text format, one "key = value" per line:
///   format = s2f-corpus-1
///   synth.<field> = ...        every SynthConfig field
///   config_hash = <16 hex digits>
///   split.train / split.val / split.test / split.gallery = space-separated ids
/// followed by "sample = <identity> <clip> <split> <wav path>" lines.
struct DatasetManifest {
  SynthConfig config;
  uint64_t config_hash = 0;
  std::map<Split, std::vector<int64_t>> splits;
  std::vector<ManifestEntry> samples;

  std::string ToText() const;
  static DatasetManifest FromText(const std::string &text);
  uint64_t Checksum() const { return Fnv1a64(ToText()); }
};

/// Writes wav/<id>_<clip>.wav, features.s2f (v_f and z per identity),
/// landmarks/<id>.csv, attributes.csv and manifest.txt under `out_dir`.
DatasetManifest BuildCorpus(const SynthConfig &cfg, const std::string &out_dir);

/// Hash of the fields that determine corpus content.
uint64_t SynthConfigHash(const SynthConfig &cfg);

/// R^2 of ridge regression from time-averaged |spectrogram| (per bin and
/// channel) to v_f: fit on `train`, score on `val`, pooled over all output
/// dimensions. Features are standardised with train statistics.
double RidgeLearnability(const Dataset &train, const Dataset &val, double ridge = 100.0);

}  // namespace s2f

#endif  // S2F_SYNTH_H_
