// s2f/synth.cc

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

#include "s2f/synth.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "s2f/config.h"
#include "s2f/tensor_file.h"
#include "s2f/wav.h"

namespace s2f {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

uint64_t Key(const char *name) { return Fnv1a64(name); }

void WriteText(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write " + path);
}

}  // namespace

void SynthConfig::Validate() const {
  if (identities < 3) throw ConfigError("synth.identities must be >= 3");
  if (clips < 1) throw ConfigError("synth.clips must be >= 1");
  if (!(duration_s > 0)) throw ConfigError("synth.duration_s must be positive");
  if (sample_rate_hz <= 0) throw ConfigError("synth.sample_rate_hz must be positive");
  if (feature_dim < kLatentDim) throw ConfigError("synth.feature_dim must be >= 16");
  if (!(f0_min > 0 && f0_min < f0_max)) throw ConfigError("synth.f0_min/f0_max out of order");
  if (f0_max * (1 + f0_jitter) * kNumHarmonics >= sample_rate_hz / 2.0)
    throw ConfigError("highest harmonic exceeds the Nyquist frequency");
  if (am_rate_min > am_rate_max) throw ConfigError("synth.am_rate_min > am_rate_max");
  if (!(am_depth >= 0 && am_depth < 1)) throw ConfigError("synth.am_depth must be in [0, 1)");
  if (latent_weights.size() != kLatentDim)
    throw ConfigError("synth.latent_weights needs 16 values");
  double norm = 0;
  for (double w : latent_weights) norm += w * w;
  if (!(norm > 0)) throw ConfigError("synth.latent_weights are all zero");
  if (!std::isfinite(snr_db)) throw ConfigError("synth.snr_db must be finite");
}

const char *SplitName(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
    case Split::kGallery: return "gallery";
  }
  return "?";
}

Split ParseSplit(const std::string &name) {
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest, Split::kGallery})
    if (name == SplitName(s)) return s;
  throw Error("unknown split '" + name + "'");
}

LandmarkSet TemplateLandmarks() {
  LandmarkSet t;
  auto &p = t.points;
  for (int i = 0; i <= 16; ++i) {  // jaw: lower half ellipse, ear to ear
    const double a = std::numbers::pi * i / 16.0;
    p[i] = {128.0 - 80.0 * std::cos(a), 110.0 + 110.0 * std::sin(a)};
  }
  const double brow_y[5] = {84, 79, 77, 78, 81};
  for (int i = 0; i < 5; ++i) {
    p[17 + i] = {68.0 + 12.0 * i, brow_y[i]};
    p[26 - i] = {188.0 - 12.0 * i, brow_y[i]};
  }
  for (int i = 0; i < 4; ++i) p[27 + i] = {128.0, 95.0 + 15.0 * i};
  const double nostril_x[5] = {113, 120, 128, 136, 143};
  const double nostril_y[5] = {150, 152, 153, 152, 150};
  for (int i = 0; i < 5; ++i) p[31 + i] = {nostril_x[i], nostril_y[i]};
  const double eye[6][2] = {{76, 100}, {86, 94}, {98, 94}, {108, 100}, {98, 105}, {86, 105}};
  for (int i = 0; i < 6; ++i) {
    p[36 + i] = {eye[i][0], eye[i][1]};
    // The right eye mirrors the left; 42 is its inner corner.
    const int mirror[6] = {3, 2, 1, 0, 5, 4};
    p[42 + i] = {256.0 - eye[mirror[i]][0], eye[mirror[i]][1]};
  }
  const double outer[12][2] = {{100, 178}, {110, 172}, {120, 169}, {128, 170},
                               {136, 169}, {146, 172}, {156, 178}, {146, 186},
                               {137, 190}, {128, 191}, {119, 190}, {110, 186}};
  for (int i = 0; i < 12; ++i) p[48 + i] = {outer[i][0], outer[i][1]};
  const double inner[8][2] = {{104, 178}, {118, 176}, {128, 176}, {138, 176},
                              {152, 178}, {138, 181}, {128, 182}, {118, 181}};
  for (int i = 0; i < 8; ++i) p[60 + i] = {inner[i][0], inner[i][1]};
  return t;
}

SynthWorld::SynthWorld(const SynthConfig &cfg) : cfg_(cfg) {
  cfg_.Validate();
  const std::size_t d = cfg_.feature_dim;
  double norm = 0;
  for (double w : cfg_.latent_weights) norm += w * w;
  norm = std::sqrt(norm);

  CounterRng ra(cfg_.seed, Key("feature_map"));
  a_.resize(d * kLatentDim);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < kLatentDim; ++j)
      a_[i * kLatentDim + j] = ra.Gaussian() * cfg_.latent_weights[j] / norm * cfg_.feature_scale;
  CounterRng rb(cfg_.seed, Key("feature_offset"));
  b_.resize(d);
  for (double &v : b_) v = rb.Gaussian() * cfg_.feature_offset * cfg_.feature_scale;

  CounterRng rm(cfg_.seed, Key("envelope"));
  for (auto &row : m_)
    for (double &v : row) v = rm.Gaussian();

  CounterRng rl(cfg_.seed, Key("landmark_map"));
  landmark_map_.resize(2 * kNumLandmarks * kLatentDim);
  for (double &v : landmark_map_) v = rl.Gaussian() * cfg_.landmark_scale;

  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> a(
      a_.data(), d, kLatentDim);
  const Eigen::MatrixXd gram = a.transpose() * a;
  const Eigen::MatrixXd p = gram.ldlt().solve(a.transpose());
  pinv_.resize(kLatentDim * d);
  for (std::size_t j = 0; j < kLatentDim; ++j)
    for (std::size_t i = 0; i < d; ++i) pinv_[j * d + i] = p(j, i);
}

Latent SynthWorld::LatentOf(int64_t identity) const {
  CounterRng r(cfg_.seed, Key("latent"), static_cast<uint64_t>(identity));
  Latent z;
  for (double &v : z) v = r.Gaussian();
  return z;
}

std::vector<float> SynthWorld::Feature(const Latent &z) const {
  std::vector<float> v(cfg_.feature_dim);
  for (std::size_t i = 0; i < v.size(); ++i) {
    double s = b_[i];
    for (std::size_t j = 0; j < kLatentDim; ++j) s += a_[i * kLatentDim + j] * z[j];
    v[i] = static_cast<float>(s);
  }
  return v;
}

Latent SynthWorld::DecodeLatent(const std::vector<float> &v) const {
  if (v.size() != cfg_.feature_dim)
    throw Error("feature has " + std::to_string(v.size()) + " dims, expected " +
                std::to_string(cfg_.feature_dim));
  Latent z{};
  for (std::size_t j = 0; j < kLatentDim; ++j) {
    double s = 0;
    for (std::size_t i = 0; i < v.size(); ++i) s += pinv_[j * v.size() + i] * (v[i] - b_[i]);
    z[j] = s;
  }
  return z;
}

std::vector<double> SynthWorld::FeatureColumn(std::size_t j) const {
  if (j >= kLatentDim) throw Error("latent index out of range");
  std::vector<double> c(cfg_.feature_dim);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = a_[i * kLatentDim + j];
  return c;
}

LandmarkSet SynthWorld::Landmarks(const Latent &z) const {
  LandmarkSet lm = TemplateLandmarks();
  for (std::size_t k = 0; k < kNumLandmarks; ++k)
    for (std::size_t c = 0; c < 2; ++c) {
      const double *row = &landmark_map_[(2 * k + c) * kLatentDim];
      double s = 0;
      for (std::size_t j = 0; j < kLatentDim; ++j) s += row[j] * z[j];
      lm.points[k][c] += s;
    }
  return lm;
}

std::map<std::string, std::string> SynthWorld::Attributes(const Latent &z) const {
  std::map<std::string, std::string> a;
  a["group"] = z[0] >= 0 ? "A" : "B";
  a["age_band"] = z[1] < -cfg_.age_threshold ? "young"
                  : z[1] > cfg_.age_threshold ? "old"
                                              : "middle";
  return a;
}

double SynthWorld::F0(const Latent &z) const {
  return cfg_.f0_min + (cfg_.f0_max - cfg_.f0_min) / (1.0 + std::exp(-cfg_.f0_gain * z[0]));
}

std::array<double, kNumHarmonics> SynthWorld::HarmonicAmplitudes(const Latent &z) const {
  const double rho = 1.0 + cfg_.tilt_gain * std::tanh(cfg_.tilt_slope * z[1]);
  std::array<double, kNumHarmonics> amp;
  for (std::size_t h = 1; h <= kNumHarmonics; ++h) {
    double env = 0;
    for (std::size_t k = 0; k < 4; ++k) env += m_[h - 1][k] * z[4 + k];
    const double la = -rho * std::log(static_cast<double>(h)) +
                      (h == 1 ? cfg_.h1_gain * z[2] : 0.0) +
                      cfg_.even_odd_gain * z[3] * (h % 2 == 0 ? 1.0 : -1.0) +
                      cfg_.envelope_gain * env;
    amp[h - 1] = std::exp(la);
  }
  return amp;
}

Waveform SynthWorld::RenderVoice(const Latent &z, int64_t identity, int64_t clip,
                                 double duration_s) const {
  if (!(duration_s > 0)) throw Error("render duration must be positive");
  CounterRng r(cfg_.seed ^ Key("clip"), static_cast<uint64_t>(identity),
               static_cast<uint64_t>(clip));
  const double rate = cfg_.sample_rate_hz;
  const auto n = static_cast<std::size_t>(std::llround(rate * duration_s));
  const double f0 = F0(z) * (1.0 + cfg_.f0_jitter * r.Uniform(-1, 1));
  const auto amp = HarmonicAmplitudes(z);
  std::array<double, kNumHarmonics> phase;
  for (double &p : phase) p = r.Uniform(0, kTwoPi);
  const double am_rate = r.Uniform(cfg_.am_rate_min, cfg_.am_rate_max);
  const double am_phase = r.Uniform(0, kTwoPi);

  Waveform w;
  w.sample_rate_hz = cfg_.sample_rate_hz;
  w.samples.assign(n, 0.0);
  double power = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = i / rate;
    double s = 0;
    for (std::size_t h = 0; h < kNumHarmonics; ++h)
      s += amp[h] * std::sin(kTwoPi * (h + 1) * f0 * t + phase[h]);
    s *= cfg_.amplitude * (1.0 + cfg_.am_depth * std::sin(kTwoPi * am_rate * t + am_phase));
    w.samples[i] = s;
    power += s * s;
  }
  // Noise level is set from the clip's own power so every clip sits at snr_db.
  const double sigma = std::sqrt(power / n / std::pow(10.0, cfg_.snr_db / 10.0));
  for (double &s : w.samples) s += sigma * r.Gaussian();
  return w;
}

std::vector<int64_t> SynthWorld::Identities(Split s) const {
  const std::size_t n = cfg_.identities;
  if (s == Split::kGallery) {
    std::vector<int64_t> g(cfg_.gallery_identities);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<int64_t>(n + i);
    return g;
  }
  std::vector<int64_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<int64_t>(i);
  CounterRng r(cfg_.seed, Key("split"));
  for (std::size_t i = n - 1; i > 0; --i) std::swap(ids[i], ids[r.Below(i + 1)]);
  const std::size_t n_val = std::max<std::size_t>(1, n / 10);
  const std::size_t n_test = n_val;
  const std::size_t n_train = n - n_val - n_test;
  std::vector<int64_t> out;
  if (s == Split::kTrain) out.assign(ids.begin(), ids.begin() + n_train);
  if (s == Split::kVal) out.assign(ids.begin() + n_train, ids.begin() + n_train + n_val);
  if (s == Split::kTest) out.assign(ids.begin() + n_train + n_val, ids.end());
  std::sort(out.begin(), out.end());
  return out;
}

SynthDataset::SynthDataset(const SynthWorld &world, Split split, std::size_t clips_per_identity,
                           SpectrogramConfig spec_cfg, double duration_s)
    : world_(world), spec_cfg_(spec_cfg), duration_s_(duration_s) {
  spec_cfg_.Validate();
  if (!(duration_s > 0 && duration_s <= world.config().duration_s))
    throw ConfigError("crop duration must be in (0, " +
                      FormatDouble(world.config().duration_s) + "] s");
  for (int64_t id : world.Identities(split))
    for (std::size_t c = 0; c < clips_per_identity; ++c)
      items_.emplace_back(id, static_cast<int64_t>(c));
}

Waveform SynthDataset::Audio(std::size_t i) const {
  const auto [id, clip] = items_.at(i);
  Waveform w = world_.RenderVoice(world_.LatentOf(id), id, clip, world_.config().duration_s);
  const auto keep = static_cast<std::size_t>(std::llround(duration_s_ * w.sample_rate_hz));
  if (keep < w.samples.size()) w.samples.resize(keep);
  return w;
}

Example SynthDataset::Get(std::size_t i) const {
  Example e;
  e.spec = Preprocess(Audio(i), spec_cfg_);
  e.target = Target(i);
  e.identity = items_.at(i).first;
  return e;
}

std::vector<float> SynthDataset::Target(std::size_t i) const {
  return world_.Feature(world_.LatentOf(items_.at(i).first));
}

uint64_t SynthConfigHash(const SynthConfig &cfg) {
  std::string s;
  for (const auto &[k, v] : SynthEntries(cfg)) s += k + " = " + v + "\n";
  return Fnv1a64(s);
}

std::string DatasetManifest::ToText() const {
  std::ostringstream o;
  o << "format = s2f-corpus-1\n";
  for (const auto &[k, v] : SynthEntries(config)) o << k << " = " << v << "\n";
  o << "config_hash = " << HexU64(config_hash) << "\n";
  for (const auto &[split, ids] : splits) {
    o << "split." << SplitName(split) << " =";
    for (int64_t id : ids) o << " " << id;
    o << "\n";
  }
  for (const ManifestEntry &e : samples)
    o << "sample = " << e.identity << " " << e.clip << " " << SplitName(e.split) << " " << e.wav
      << "\n";
  return o.str();
}

DatasetManifest DatasetManifest::FromText(const std::string &text) {
  DatasetManifest m;
  bool have_format = false;
  for (const KeyValue &kv : ParseKeyValues(text, "manifest")) {
    std::istringstream in(kv.value);
    if (kv.key == "format") {
      if (kv.value != "s2f-corpus-1") throw Error(kv.origin + ": unsupported manifest format");
      have_format = true;
    } else if (kv.key == "config_hash") {
      m.config_hash = std::stoull(kv.value, nullptr, 16);
    } else if (kv.key.rfind("split.", 0) == 0) {
      auto &ids = m.splits[ParseSplit(kv.key.substr(6))];
      for (int64_t id; in >> id;) ids.push_back(id);
    } else if (kv.key == "sample") {
      ManifestEntry e;
      std::string split;
      if (!(in >> e.identity >> e.clip >> split >> e.wav))
        throw Error(kv.origin + ": malformed sample line");
      e.split = ParseSplit(split);
      m.samples.push_back(std::move(e));
    } else if (!SetSynthKey(&m.config, kv.key, kv.value)) {
      throw Error(kv.origin + ": unknown manifest key '" + kv.key + "'");
    }
  }
  if (!have_format) throw Error("manifest has no format line");
  if (m.config_hash != SynthConfigHash(m.config))
    throw VerificationError("manifest config_hash does not match its synth fields");
  return m;
}

DatasetManifest BuildCorpus(const SynthConfig &cfg, const std::string &out_dir) {
  namespace fs = std::filesystem;
  const SynthWorld world(cfg);
  fs::create_directories(fs::path(out_dir) / "wav");
  fs::create_directories(fs::path(out_dir) / "landmarks");

  DatasetManifest m;
  m.config = cfg;
  m.config_hash = SynthConfigHash(cfg);
  std::vector<int64_t> all_ids;
  std::ostringstream attrs;
  attrs << "identity,split,group,age_band\n";
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest, Split::kGallery}) {
    m.splits[s] = world.Identities(s);
    const std::size_t clips = s == Split::kGallery ? 1 : cfg.clips;
    for (int64_t id : m.splits[s]) {
      all_ids.push_back(id);
      const Latent z = world.LatentOf(id);
      for (std::size_t c = 0; c < clips; ++c) {
        ManifestEntry e{id, static_cast<int64_t>(c), s,
                        "wav/" + std::to_string(id) + "_" + std::to_string(c) + ".wav"};
        WriteWav((fs::path(out_dir) / e.wav).string(),
                 world.RenderVoice(z, id, e.clip, cfg.duration_s));
        m.samples.push_back(std::move(e));
      }
      WriteText((fs::path(out_dir) / "landmarks" / (std::to_string(id) + ".csv")).string(),
                LandmarksCsv(world.Landmarks(z)));
      const auto a = world.Attributes(z);
      attrs << id << "," << SplitName(s) << "," << a.at("group") << "," << a.at("age_band")
            << "\n";
    }
  }
  std::sort(all_ids.begin(), all_ids.end());

  Tensor<float> features({all_ids.size(), cfg.feature_dim});
  Tensor<double> latents({all_ids.size(), kLatentDim});
  Tensor<double> ids({all_ids.size()});
  for (std::size_t r = 0; r < all_ids.size(); ++r) {
    const Latent z = world.LatentOf(all_ids[r]);
    const auto v = world.Feature(z);
    std::copy(v.begin(), v.end(), features.data() + r * cfg.feature_dim);
    std::copy(z.begin(), z.end(), latents.data() + r * kLatentDim);
    ids.data()[r] = static_cast<double>(all_ids[r]);
  }
  TensorFile tf;
  tf.SetMeta("config_hash", HexU64(m.config_hash));
  tf.Add("identities", std::move(ids));
  tf.Add("features", std::move(features));
  tf.Add("latents", std::move(latents));
  tf.Save((fs::path(out_dir) / "features.s2f").string());
  WriteText((fs::path(out_dir) / "attributes.csv").string(), attrs.str());
  WriteText((fs::path(out_dir) / "manifest.txt").string(), m.ToText());
  return m;
}

double RidgeLearnability(const Dataset &train, const Dataset &val, double ridge) {
  if (train.size() < 2 || val.size() < 2) throw Error("ridge check needs >= 2 examples per split");
  auto summarize = [](const Dataset &ds, Eigen::MatrixXd *x, Eigen::MatrixXd *y) {
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const Example e = ds.Get(i);
      const std::size_t t = e.spec.frames(), f = e.spec.bins();
      if (i == 0) {
        x->resize(ds.size(), 2 * f);
        y->resize(ds.size(), e.target.size());
      }
      x->row(i).setZero();
      const float *p = e.spec.data.data();
      for (std::size_t k = 0; k < t * f * 2; ++k) (*x)(i, k % (2 * f)) += std::abs(p[k]);
      x->row(i) /= static_cast<double>(t);
      for (std::size_t j = 0; j < e.target.size(); ++j) (*y)(i, j) = e.target[j];
    }
  };
  Eigen::MatrixXd xt, yt, xv, yv;
  summarize(train, &xt, &yt);
  summarize(val, &xv, &yv);

  const Eigen::RowVectorXd mu = xt.colwise().mean();
  Eigen::RowVectorXd sd =
      ((xt.rowwise() - mu).array().square().colwise().sum() / xt.rows()).sqrt();
  for (Eigen::Index j = 0; j < sd.size(); ++j)
    if (sd(j) < 1e-12) sd(j) = 1.0;
  xt = (xt.rowwise() - mu).array().rowwise() / sd.array();
  xv = (xv.rowwise() - mu).array().rowwise() / sd.array();
  const Eigen::RowVectorXd ymu = yt.colwise().mean();
  yt.rowwise() -= ymu;

  Eigen::MatrixXd gram = xt.transpose() * xt;
  gram.diagonal().array() += ridge;
  const Eigen::MatrixXd w = gram.ldlt().solve(xt.transpose() * yt);
  const Eigen::MatrixXd pred = (xv * w).rowwise() + ymu;
  const double sse = (yv - pred).squaredNorm();
  const double sst = (yv.rowwise() - yv.colwise().mean()).squaredNorm();
  return 1.0 - sse / sst;
}

}  // namespace s2f
