// s2f/pipeline.h

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

// On-disk stages: corpus -> spectrogram cache -> checkpoint -> report.
//
// Every artifact records three hashes: the corpus hash (synth fields), the
// frontend hash (spectrogram fields other than duration) and the full
// resolved config hash. Stages refuse inputs whose corpus or frontend hash
// differs from what they expect.

#ifndef S2F_PIPELINE_H_
#define S2F_PIPELINE_H_

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "s2f/config.h"
#include "s2f/synth.h"
#include "s2f/trainer.h"

namespace s2f {

/// Hash mismatch between pipeline artifacts.
class ArtifactMismatch : public Error {
 public:
  using Error::Error;
};

struct Corpus {
  std::string dir;
  DatasetManifest manifest;
  std::map<int64_t, std::vector<float>> features;

  /// Reads manifest.txt and features.s2f; their hashes must agree.
  static Corpus Load(const std::string &dir);
  uint64_t hash() const { return manifest.config_hash; }
};

struct SpecCacheEntry {
  int64_t identity = 0, clip = 0;
  Split split = Split::kTrain;
  std::string file;  // relative to the cache directory
};

/// Directory of per-clip spectrogram tensor files plus index.txt:
///   format = s2f-spec-cache-1
///   duration_s, frontend_hash, corpus_hash, config_hash
///   entry = <identity> <clip> <split> <file>
struct SpecCache {
  std::string dir;
  double duration_s = 0;
  uint64_t frontend_hash = 0, corpus_hash = 0, config_hash = 0;
  std::vector<SpecCacheEntry> entries;

  std::vector<SpecCacheEntry> Select(Split s) const;
  CompressedSpectrogram Read(const SpecCacheEntry &e) const;
  std::string IndexText() const;
  static SpecCache Load(const std::string &dir);
};

/// Spectrogram of one WAV file as a tensor file ("spectrogram", [T,F,2]).
void PreprocessWavFile(const RunConfig &cfg, const std::string &wav_path,
                       const std::string &out_path);

/// Crops every corpus clip to spectrogram.target_duration_s and caches its
/// spectrogram under out_dir.
SpecCache RunPreprocess(const RunConfig &cfg, const Corpus &corpus, const std::string &out_dir);

/// Cached spectrograms of one split paired with corpus targets.
class CachedDataset : public Dataset {
 public:
  CachedDataset(const SpecCache &cache, const Corpus &corpus, Split split);
  std::size_t size() const override { return entries_.size(); }
  Example Get(std::size_t i) const override;
  std::vector<float> Target(std::size_t i) const override;
  int64_t Identity(std::size_t i) const override { return entries_.at(i).identity; }

 private:
  const SpecCache &cache_;
  const Corpus &corpus_;
  std::vector<SpecCacheEntry> entries_;
};

/// Trains from a cache; writes config.txt, loss.csv and checkpoints to
/// out_dir. A resume checkpoint must carry the same config hash.
Checkpoint RunTrain(const RunConfig &cfg, const Corpus &corpus, const SpecCache &cache,
                    const std::string &out_dir, const Checkpoint *resume = nullptr,
                    std::function<void(const CurveRow &)> on_row = nullptr);

/// Eval-mode predictions for cache entries, in order.
std::vector<Feature> Predict(const EncoderParams<float> &params, const SpecCache &cache,
                             const std::vector<SpecCacheEntry> &entries,
                             std::size_t batch_size = 8);

struct DurationRow {
  double duration_s = 0;
  double mean_angle_deg = 0;
  double recall_at_1 = 0;  // percent
};

struct EvalReport {
  uint64_t checkpoint_config_hash = 0, frontend_hash = 0, corpus_hash = 0;
  std::size_t similarity_n = 0;
  std::vector<DistanceStats> similarity;  // cos, l2, l1 on the test split
  RecallReport recall;                    // gallery split
  std::vector<DurationRow> durations;     // empty without a second cache
  ConfusionMatrix group, age_band;
  std::vector<CraniofacialRow> craniofacial;
  std::size_t collapse_n = 0;
  double pairwise_pred = 0, pairwise_target = 0;
  double pairwise_compare = -1;  // < 0: no comparison checkpoint

  std::string ToText() const;
};

struct EvalOptions {
  const SpecCache *short_cache = nullptr;  // second duration for the ablation
  const Checkpoint *compare = nullptr;     // e.g. a run trained without BN
};

EvalReport RunEval(const RunConfig &cfg, const Corpus &corpus, const SpecCache &cache,
                   const Checkpoint &model, const EvalOptions &opt = {});

/// Checkpoint metadata written by RunTrain.
std::map<std::string, std::string> ArtifactMeta(const RunConfig &cfg, uint64_t corpus_hash);

}  // namespace s2f

#endif  // S2F_PIPELINE_H_
