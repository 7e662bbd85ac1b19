// s2f/tools/s2f.cc

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

// s2f: synth | preprocess | train | eval | gradcheck
//
// Exit codes: 0 success, 1 usage or config error, 2 runtime failure,
// 3 verification failure. S2F_OUT_DIR, when set, is the default for --out.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "s2f/config.h"
#include "s2f/gradcheck.h"
#include "s2f/pipeline.h"

namespace {

namespace fs = std::filesystem;
using namespace s2f;

enum ExitCode { kOk = 0, kUsage = 1, kRuntime = 2, kVerification = 3 };

struct Flags {
  std::vector<std::string> configs;
  std::vector<std::string> overrides;  // key=value
  std::optional<uint64_t> seed;
  std::string out;
  std::optional<int> duration;
  bool no_bn = false;
  std::optional<std::string> metric;
  std::vector<std::size_t> ks;

  std::string corpus, cache, short_cache, checkpoint, compare, resume, wav;
};

RunConfig Resolve(const Flags &f) {
  RunConfig cfg;
  for (const auto &path : f.configs) cfg.Apply(LoadKeyValues(path));
  std::vector<KeyValue> layer;
  for (const auto &o : f.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + o + "'");
    layer.push_back({o.substr(0, eq), o.substr(eq + 1), "--set"});
  }
  if (f.seed) {
    const std::string s = std::to_string(*f.seed);
    for (const char *key : {"synth.seed", "encoder.seed", "train.shuffle_seed"})
      layer.push_back({key, s, "--seed"});
  }
  if (f.duration) {
    if (*f.duration != 3 && *f.duration != 6) throw ConfigError("--duration must be 3 or 6");
    layer.push_back({"spectrogram.target_duration_s", std::to_string(*f.duration), "--duration"});
  }
  if (f.no_bn) layer.push_back({"encoder.batch_norm", "false", "--no-bn"});
  if (f.metric) layer.push_back({"eval.metric", *f.metric, "--metric"});
  if (!f.ks.empty()) {
    std::string v;
    for (std::size_t k : f.ks) v += (v.empty() ? "" : " ") + std::to_string(k);
    layer.push_back({"eval.ks", v, "--k"});
  }
  cfg.Apply(layer);
  cfg.Validate();
  std::cerr << "# resolved config (hash " << HexU64(cfg.Hash()) << ")\n" << cfg.ToText();
  return cfg;
}

std::string Require(const std::string &value, const char *flag) {
  if (value.empty()) throw ConfigError(std::string("missing required ") + flag);
  return value;
}

void WriteFile(const fs::path &p, const std::string &text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write " + p.string());
}

int CmdSynth(const Flags &f) {
  const RunConfig cfg = Resolve(f);
  const std::string out = Require(f.out, "--out");
  const DatasetManifest m = BuildCorpus(cfg.synth, out);
  std::printf("corpus %s: %zu samples, manifest checksum %s\n", out.c_str(), m.samples.size(),
              HexU64(m.Checksum()).c_str());
  return kOk;
}

int CmdPreprocess(const Flags &f) {
  const RunConfig cfg = Resolve(f);
  const std::string out = Require(f.out, "--out");
  if (!f.wav.empty()) {
    PreprocessWavFile(cfg, f.wav, out);
    std::printf("wrote %s\n", out.c_str());
    return kOk;
  }
  const Corpus corpus = Corpus::Load(Require(f.corpus, "--corpus or --wav"));
  const SpecCache cache = RunPreprocess(cfg, corpus, out);
  std::printf("cached %zu spectrograms (%gs) in %s\n", cache.entries.size(), cache.duration_s,
              out.c_str());
  return kOk;
}

int CmdTrain(const Flags &f) {
  const RunConfig cfg = Resolve(f);
  const std::string out = Require(f.out, "--out");
  const Corpus corpus = Corpus::Load(Require(f.corpus, "--corpus"));
  const SpecCache cache = SpecCache::Load(Require(f.cache, "--cache"));
  std::optional<Checkpoint> resume;
  if (!f.resume.empty()) resume = LoadCheckpoint(f.resume, cfg.encoder);
  std::printf("iteration lr total term1 term2 term3 val_total\n");
  const Checkpoint ck = RunTrain(cfg, corpus, cache, out, resume ? &*resume : nullptr,
                                 [](const CurveRow &r) {
                                   std::printf("%llu %.6g %.6g %.6g %.6g %.6g %.6g\n",
                                               static_cast<unsigned long long>(r.iteration),
                                               r.lr, r.train.total, r.train.term1,
                                               r.train.term2, r.train.term3, r.val_total);
                                   std::fflush(stdout);
                                 });
  std::printf("finished at iteration %llu; checkpoint %s\n",
              static_cast<unsigned long long>(ck.iteration),
              (fs::path(out) / "checkpoint.s2f").c_str());
  return kOk;
}

int CmdEval(const Flags &f) {
  const RunConfig cfg = Resolve(f);
  const std::string out = Require(f.out, "--out");
  const Corpus corpus = Corpus::Load(Require(f.corpus, "--corpus"));
  const SpecCache cache = SpecCache::Load(Require(f.cache, "--cache"));
  const Checkpoint model = LoadCheckpoint(Require(f.checkpoint, "--checkpoint"), cfg.encoder);
  std::optional<SpecCache> short_cache;
  std::optional<Checkpoint> compare;
  if (!f.short_cache.empty()) short_cache = SpecCache::Load(f.short_cache);
  if (!f.compare.empty()) {
    EncoderConfig no_bn = cfg.encoder;
    no_bn.batch_norm = false;
    compare = LoadCheckpoint(f.compare, no_bn);
  }
  EvalOptions opt;
  opt.short_cache = short_cache ? &*short_cache : nullptr;
  opt.compare = compare ? &*compare : nullptr;
  const std::string report = RunEval(cfg, corpus, cache, model, opt).ToText();
  WriteFile(fs::path(out) / "report.txt", report);
  std::fputs(report.c_str(), stdout);
  return kOk;
}

int CmdGradcheck(const Flags &f) {
  std::vector<GradcheckResult> results;
  bool ok = true;
  for (const auto &c : GradcheckSuite()) {
    results.push_back(RunGradcheck(c));
    ok = ok && results.back().passed;
  }
  const std::string report = GradcheckReport(results);
  if (!f.out.empty()) WriteFile(f.out, report);
  std::fputs(report.c_str(), stdout);
  return ok ? kOk : kVerification;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"s2f: voice-to-face-feature encoder toolkit"};
  app.require_subcommand(1);
  Flags f;
  if (const char *env = std::getenv("S2F_OUT_DIR")) f.out = env;

  auto common = [&f](CLI::App *c) {
    c->add_option("--config", f.configs, "Config file(s), applied in order");
    c->add_option("--set", f.overrides, "Override key=value (repeatable)");
    c->add_option("--seed", f.seed, "Seed for corpus, initialisation and shuffling");
    c->add_option("--out", f.out, "Output file or directory");
  };
  CLI::App *synth = app.add_subcommand("synth", "Build the synthetic corpus");
  common(synth);
  CLI::App *pre = app.add_subcommand("preprocess", "Cache spectrograms");
  common(pre);
  pre->add_option("--corpus", f.corpus, "Corpus directory");
  pre->add_option("--wav", f.wav, "Single WAV file instead of a corpus");
  pre->add_option("--duration", f.duration, "Clip duration in seconds (3 or 6)");
  CLI::App *train = app.add_subcommand("train", "Train the encoder");
  common(train);
  train->add_option("--corpus", f.corpus, "Corpus directory");
  train->add_option("--cache", f.cache, "Spectrogram cache directory");
  train->add_option("--resume", f.resume, "Checkpoint to resume from");
  train->add_flag("--no-bn", f.no_bn, "Train without batch normalisation");
  CLI::App *eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  common(eval);
  eval->add_option("--corpus", f.corpus, "Corpus directory");
  eval->add_option("--cache", f.cache, "Spectrogram cache directory");
  eval->add_option("--short-cache", f.short_cache, "Second cache for the duration ablation");
  eval->add_option("--checkpoint", f.checkpoint, "Checkpoint to evaluate");
  eval->add_option("--compare", f.compare, "Checkpoint trained with --no-bn, for the collapse comparison");
  eval->add_option("--duration", f.duration, "Duration of --cache in seconds (3 or 6)");
  eval->add_flag("--no-bn", f.no_bn, "The checkpoint was trained without BN");
  eval->add_option("--metric", f.metric, "Retrieval metric: cos, l1 or l2");
  eval->add_option("--k", f.ks, "Recall cutoffs")->delimiter(',');
  CLI::App *gc = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  gc->add_option("--out", f.out, "Report file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (synth->parsed()) return CmdSynth(f);
    if (pre->parsed()) return CmdPreprocess(f);
    if (train->parsed()) return CmdTrain(f);
    if (eval->parsed()) return CmdEval(f);
    if (gc->parsed()) return CmdGradcheck(f);
  } catch (const ConfigError &e) {
    std::cerr << "s2f: config error: " << e.what() << "\n";
    return kUsage;
  } catch (const VerificationError &e) {
    std::cerr << "s2f: verification failed: " << e.what() << "\n";
    return kVerification;
  } catch (const std::exception &e) {
    std::cerr << "s2f: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
