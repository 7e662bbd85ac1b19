// s2f/pipeline.cc

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

#include "s2f/pipeline.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "s2f/tensor_file.h"
#include "s2f/wav.h"

namespace s2f {
namespace fs = std::filesystem;

namespace {

std::string ReadText(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void WriteText(const fs::path &p, const std::string &text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write " + p.string());
}

uint64_t ParseHex(const std::string &s) { return std::stoull(s, nullptr, 16); }

void Expect(uint64_t got, uint64_t want, const std::string &what) {
  if (got != want)
    throw ArtifactMismatch(what + " hash mismatch: " + HexU64(got) + " vs expected " +
                           HexU64(want));
}

Waveform Crop(Waveform w, double duration_s) {
  const auto keep = static_cast<std::size_t>(std::llround(duration_s * w.sample_rate_hz));
  if (keep < w.samples.size()) w.samples.resize(keep);
  return w;
}

}  // namespace

std::map<std::string, std::string> ArtifactMeta(const RunConfig &cfg, uint64_t corpus_hash) {
  return {{"config_hash", HexU64(cfg.Hash())},
          {"frontend_hash", HexU64(cfg.FrontendHash())},
          {"corpus_hash", HexU64(corpus_hash)}};
}

Corpus Corpus::Load(const std::string &dir) {
  Corpus c;
  c.dir = dir;
  c.manifest = DatasetManifest::FromText(ReadText(fs::path(dir) / "manifest.txt"));
  const TensorFile tf = TensorFile::Load((fs::path(dir) / "features.s2f").string());
  Expect(ParseHex(tf.Meta("config_hash")), c.manifest.config_hash, "features.s2f corpus");
  const Tensor<double> &ids = tf.GetF64("identities");
  const Tensor<float> &feats = tf.GetF32("features");
  const std::size_t d = feats.dim(1);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const float *row = feats.data() + r * d;
    c.features[static_cast<int64_t>(ids.data()[r])] = std::vector<float>(row, row + d);
  }
  return c;
}

std::vector<SpecCacheEntry> SpecCache::Select(Split s) const {
  std::vector<SpecCacheEntry> out;
  for (const auto &e : entries)
    if (e.split == s) out.push_back(e);
  return out;
}

CompressedSpectrogram SpecCache::Read(const SpecCacheEntry &e) const {
  const TensorFile tf = TensorFile::Load((fs::path(dir) / e.file).string());
  Expect(ParseHex(tf.Meta("frontend_hash")), frontend_hash, e.file + " frontend");
  return CompressedSpectrogram{tf.GetF32("spectrogram")};
}

std::string SpecCache::IndexText() const {
  std::ostringstream o;
  o << "format = s2f-spec-cache-1\n"
    << "duration_s = " << FormatDouble(duration_s) << "\n"
    << "frontend_hash = " << HexU64(frontend_hash) << "\n"
    << "corpus_hash = " << HexU64(corpus_hash) << "\n"
    << "config_hash = " << HexU64(config_hash) << "\n";
  for (const auto &e : entries)
    o << "entry = " << e.identity << " " << e.clip << " " << SplitName(e.split)
      << " " << e.file << "\n";
  return o.str();
}

SpecCache SpecCache::Load(const std::string &dir) {
  SpecCache c;
  c.dir = dir;
  bool have_format = false;
  const fs::path index = fs::path(dir) / "index.txt";
  for (const KeyValue &kv : ParseKeyValues(ReadText(index), index.string())) {
    if (kv.key == "format") {
      if (kv.value != "s2f-spec-cache-1") throw Error(kv.origin + ": unsupported cache format");
      have_format = true;
    } else if (kv.key == "duration_s") {
      c.duration_s = std::stod(kv.value);
    } else if (kv.key == "frontend_hash") {
      c.frontend_hash = ParseHex(kv.value);
    } else if (kv.key == "corpus_hash") {
      c.corpus_hash = ParseHex(kv.value);
    } else if (kv.key == "config_hash") {
      c.config_hash = ParseHex(kv.value);
    } else if (kv.key == "entry") {
      std::istringstream in(kv.value);
      SpecCacheEntry e;
      std::string split;
      if (!(in >> e.identity >> e.clip >> split >> e.file))
        throw Error(kv.origin + ": malformed entry");
      e.split = ParseSplit(split);
      c.entries.push_back(std::move(e));
    } else {
      throw Error(kv.origin + ": unknown key '" + kv.key + "'");
    }
  }
  if (!have_format) throw Error(index.string() + " has no format line");
  return c;
}

void PreprocessWavFile(const RunConfig &cfg, const std::string &wav_path,
                       const std::string &out_path) {
  const CompressedSpectrogram spec = Preprocess(ReadWav(wav_path), cfg.spectrogram);
  TensorFile tf;
  for (const auto &[k, v] : ArtifactMeta(cfg, 0))
    if (k != "corpus_hash") tf.SetMeta(k, v);
  tf.SetMeta("source", wav_path);
  tf.Add("spectrogram", spec.data);
  tf.Save(out_path);
}

SpecCache RunPreprocess(const RunConfig &cfg, const Corpus &corpus, const std::string &out_dir) {
  cfg.spectrogram.Validate();
  const double duration = cfg.spectrogram.target_duration_s;
  if (!(duration > 0)) throw ConfigError("spectrogram.target_duration_s must be positive here");
  fs::create_directories(fs::path(out_dir) / "spec");

  SpecCache c;
  c.dir = out_dir;
  c.duration_s = duration;
  c.frontend_hash = cfg.FrontendHash();
  c.corpus_hash = corpus.hash();
  c.config_hash = cfg.Hash();
  const auto meta = ArtifactMeta(cfg, corpus.hash());
  for (const ManifestEntry &m : corpus.manifest.samples) {
    SpecCacheEntry e{m.identity, m.clip, m.split,
                     "spec/" + std::to_string(m.identity) + "_" + std::to_string(m.clip) + ".s2f"};
    const Waveform w = Crop(ReadWav((fs::path(corpus.dir) / m.wav).string()), duration);
    TensorFile tf;
    for (const auto &[k, v] : meta) tf.SetMeta(k, v);
    tf.SetMeta("identity", std::to_string(m.identity));
    tf.SetMeta("clip", std::to_string(m.clip));
    tf.Add("spectrogram", Preprocess(w, cfg.spectrogram).data);
    tf.Save((fs::path(out_dir) / e.file).string());
    c.entries.push_back(std::move(e));
  }
  WriteText(fs::path(out_dir) / "index.txt", c.IndexText());
  return c;
}

CachedDataset::CachedDataset(const SpecCache &cache, const Corpus &corpus, Split split)
    : cache_(cache), corpus_(corpus), entries_(cache.Select(split)) {
  Expect(cache.corpus_hash, corpus.hash(), "spectrogram cache corpus");
  for (const auto &e : entries_)
    if (!corpus.features.count(e.identity))
      throw Error("identity " + std::to_string(e.identity) + " has no target feature");
}

Example CachedDataset::Get(std::size_t i) const {
  const SpecCacheEntry &e = entries_.at(i);
  return Example{cache_.Read(e), corpus_.features.at(e.identity), e.identity};
}

std::vector<float> CachedDataset::Target(std::size_t i) const {
  return corpus_.features.at(entries_.at(i).identity);
}

Checkpoint RunTrain(const RunConfig &cfg, const Corpus &corpus, const SpecCache &cache,
                    const std::string &out_dir, const Checkpoint *resume,
                    std::function<void(const CurveRow &)> on_row) {
  cfg.Validate();
  Expect(cache.frontend_hash, cfg.FrontendHash(), "spectrogram cache frontend");
  Expect(cache.corpus_hash, corpus.hash(), "spectrogram cache corpus");
  if (resume) {
    const auto it = resume->meta.find("config_hash");
    if (it == resume->meta.end()) throw ArtifactMismatch("resume checkpoint has no config_hash");
    Expect(ParseHex(it->second), cfg.Hash(), "resume checkpoint config");
  }
  fs::create_directories(out_dir);
  WriteText(fs::path(out_dir) / "config.txt", cfg.ToText());

  const CachedDataset train(cache, corpus, Split::kTrain);
  const CachedDataset val(cache, corpus, Split::kVal);
  const auto params = BuildEncoder<float>(cfg.encoder, cfg.spectrogram.NumBins(), cfg.encoder_seed);
  const auto heads = BuildHeads<float>(cfg.encoder.output_dim(), cfg.vgg_seed, cfg.dec_seed);

  TrainOptions opt;
  opt.seed = cfg.shuffle_seed;
  opt.val_every = cfg.val_every;
  opt.checkpoint_every = cfg.checkpoint_every;
  opt.max_iterations = cfg.max_iterations;
  opt.out_dir = out_dir;
  opt.checkpoint_meta = ArtifactMeta(cfg, corpus.hash());
  opt.on_row = std::move(on_row);
  return Train(params, heads, train, val.size() ? &val : nullptr, cfg.adam, cfg.loss, opt,
               resume);
}

std::vector<Feature> Predict(const EncoderParams<float> &params, const SpecCache &cache,
                             const std::vector<SpecCacheEntry> &entries,
                             std::size_t batch_size) {
  std::vector<Feature> out;
  for (std::size_t start = 0; start < entries.size(); start += batch_size) {
    const std::size_t end = std::min(entries.size(), start + batch_size);
    std::vector<CompressedSpectrogram> specs;
    for (std::size_t i = start; i < end; ++i) specs.push_back(cache.Read(entries[i]));
    std::vector<const CompressedSpectrogram *> ptrs;
    for (const auto &s : specs) ptrs.push_back(&s);
    const Tensor<float> y = Encode(params, StackSpectrograms(ptrs));
    const std::size_t d = y.dim(1);
    for (std::size_t n = 0; n < end - start; ++n)
      out.emplace_back(y.data() + n * d, y.data() + (n + 1) * d);
  }
  return out;
}

namespace {

void CheckCheckpoint(const Checkpoint &ck, const RunConfig &cfg, uint64_t corpus_hash,
                     const std::string &what) {
  for (const char *key : {"frontend_hash", "corpus_hash"})
    if (!ck.meta.count(key)) throw ArtifactMismatch(what + " has no " + key);
  Expect(ParseHex(ck.meta.at("frontend_hash")), cfg.FrontendHash(), what + " frontend");
  Expect(ParseHex(ck.meta.at("corpus_hash")), corpus_hash, what + " corpus");
}

std::vector<Feature> Targets(const Corpus &corpus, const std::vector<SpecCacheEntry> &entries) {
  std::vector<Feature> t;
  for (const auto &e : entries) t.push_back(corpus.features.at(e.identity));
  return t;
}

}  // namespace

EvalReport RunEval(const RunConfig &cfg, const Corpus &corpus, const SpecCache &cache,
                   const Checkpoint &model, const EvalOptions &opt) {
  CheckCheckpoint(model, cfg, corpus.hash(), "checkpoint");
  Expect(cache.frontend_hash, cfg.FrontendHash(), "spectrogram cache frontend");
  Expect(cache.corpus_hash, corpus.hash(), "spectrogram cache corpus");
  if (opt.short_cache) {
    Expect(opt.short_cache->frontend_hash, cfg.FrontendHash(), "second cache frontend");
    Expect(opt.short_cache->corpus_hash, corpus.hash(), "second cache corpus");
  }
  if (opt.compare) CheckCheckpoint(*opt.compare, cfg, corpus.hash(), "comparison checkpoint");

  EvalReport r;
  r.checkpoint_config_hash =
      model.meta.count("config_hash") ? ParseHex(model.meta.at("config_hash")) : 0;
  r.frontend_hash = cfg.FrontendHash();
  r.corpus_hash = corpus.hash();
  const SynthWorld world(corpus.manifest.config);

  const auto test = cache.Select(Split::kTest);
  const auto pred_test = Predict(model.params, cache, test);
  const auto target_test = Targets(corpus, test);
  r.similarity_n = test.size();
  for (Metric m : {Metric::kCosine, Metric::kL2, Metric::kL1})
    r.similarity.push_back(SimilarityStats(pred_test, target_test, m));

  const auto gallery = cache.Select(Split::kGallery);
  const auto pred_gallery = Predict(model.params, cache, gallery);
  const auto target_gallery = Targets(corpus, gallery);
  std::vector<std::size_t> truth(gallery.size());
  for (std::size_t i = 0; i < truth.size(); ++i) truth[i] = i;
  r.recall = RecallAtK(pred_gallery, target_gallery, truth, cfg.eval.metric, cfg.eval.ks);

  if (opt.short_cache) {
    auto row = [&](const SpecCache &c, const std::vector<Feature> &pred) {
      DurationRow d;
      d.duration_s = c.duration_s;
      d.mean_angle_deg = SimilarityStats(pred, target_gallery, Metric::kCosine).mean;
      d.recall_at_1 = RecallAtK(pred, target_gallery, truth, Metric::kCosine, {1}).At(1);
      return d;
    };
    const auto short_entries = opt.short_cache->Select(Split::kGallery);
    if (short_entries.size() != gallery.size())
      throw ArtifactMismatch("second cache has a different gallery");
    r.durations.push_back(row(*opt.short_cache, Predict(model.params, *opt.short_cache,
                                                        short_entries)));
    r.durations.push_back(row(cache, pred_gallery));
    if (r.durations[0].duration_s > r.durations[1].duration_s)
      std::swap(r.durations[0], r.durations[1]);
  }

  // Attribute classifiers are fit on training identities' target features.
  std::vector<Feature> fit_features;
  std::vector<std::string> fit_group, fit_age;
  for (int64_t id : corpus.manifest.splits.at(Split::kTrain)) {
    const auto a = world.Attributes(world.LatentOf(id));
    fit_features.push_back(corpus.features.at(id));
    fit_group.push_back(a.at("group"));
    fit_age.push_back(a.at("age_band"));
  }
  for (auto [labels, out] : {std::pair{&fit_group, &r.group}, std::pair{&fit_age, &r.age_band}}) {
    NearestCentroid clf;
    clf.Fit(fit_features, *labels);
    std::vector<std::string> from_face, from_voice;
    for (std::size_t i = 0; i < gallery.size(); ++i) {
      from_face.push_back(clf.Predict(target_gallery[i]));
      from_voice.push_back(clf.Predict(pred_gallery[i]));
    }
    *out = Confusion(from_face, from_voice, clf.labels());
  }

  // Landmarks of both features through the corpus's least-squares decoder.
  std::vector<LandmarkSet> ref, rec;
  for (std::size_t i = 0; i < gallery.size(); ++i) {
    ref.push_back(world.Landmarks(world.DecodeLatent(target_gallery[i])));
    rec.push_back(world.Landmarks(world.DecodeLatent(pred_gallery[i])));
  }
  const auto table = ParseMeasureTable(DefaultMeasureTableText());
  r.craniofacial = CraniofacialCorrelations(ref, rec, table, table.front().name,
                                            corpus.manifest.config.seed);

  r.collapse_n = std::min(cfg.eval.collapse_identities, gallery.size());
  const std::vector<Feature> first_pred(pred_gallery.begin(), pred_gallery.begin() + r.collapse_n);
  const std::vector<Feature> first_target(target_gallery.begin(),
                                          target_gallery.begin() + r.collapse_n);
  r.pairwise_pred = MeanPairwiseAngleDeg(first_pred);
  r.pairwise_target = MeanPairwiseAngleDeg(first_target);
  if (opt.compare) {
    const std::vector<SpecCacheEntry> sub(gallery.begin(), gallery.begin() + r.collapse_n);
    r.pairwise_compare = MeanPairwiseAngleDeg(Predict(opt.compare->params, cache, sub));
  }
  return r;
}

std::string EvalReport::ToText() const {
  std::ostringstream o;
  char buf[256];
  auto line = [&](const char *fmt, auto... args) {
    std::snprintf(buf, sizeof(buf), fmt, args...);
    o << buf;
  };
  o << "# s2f evaluation report\n";
  o << "checkpoint_config_hash = " << HexU64(checkpoint_config_hash) << "\n";
  o << "frontend_hash = " << HexU64(frontend_hash) << "\n";
  o << "corpus_hash = " << HexU64(corpus_hash) << "\n\n";

  line("[similarity] split=test n=%zu\n", similarity_n);
  o << "metric mean std\n";
  for (const auto &s : similarity) line("%s %.6f %.6f\n", MetricName(s.metric), s.mean, s.std);

  line("\n[recall] split=gallery metric=%s n=%zu\n", MetricName(recall.metric),
       recall.gallery_size);
  o << "k recall_percent random_percent\n";
  for (std::size_t i = 0; i < recall.ks.size(); ++i)
    line("%zu %.2f %.2f\n", recall.ks[i], recall.recall_percent[i], recall.baseline_percent[i]);

  o << "\n[duration] split=gallery metric=cos\n";
  if (durations.empty()) {
    o << "not run (no second spectrogram cache)\n";
  } else {
    o << "duration_s mean_angle_deg recall_at_1_percent\n";
    for (const auto &d : durations)
      line("%s %.6f %.2f\n", FormatDouble(d.duration_s).c_str(), d.mean_angle_deg, d.recall_at_1);
  }

  o << "\n[attributes] rows: classifier on target feature, columns: on predicted feature\n";
  o << "group\n" << group.ToText() << "age_band\n" << age_band.ToText();

  o << "\n[craniofacial] split=gallery\n";
  o << "measure r p n\n";
  for (const auto &c : craniofacial)
    line("%s %.6f %.3e %zu\n", c.name.c_str(), c.corr.r, c.corr.p, c.corr.n);

  line("\n[collapse] identities=%zu\n", collapse_n);
  line("pairwise_angle_pred = %.6f\n", pairwise_pred);
  line("pairwise_angle_target = %.6f\n", pairwise_target);
  if (pairwise_compare >= 0) {
    line("pairwise_angle_compare = %.6f\n", pairwise_compare);
    line("ratio = %.6f\n", pairwise_compare > 0 ? pairwise_pred / pairwise_compare : INFINITY);
  }
  return o.str();
}

}  // namespace s2f
