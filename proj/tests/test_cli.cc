// s2f/tests/test_cli.cc

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

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "s2f/config.h"
#include "s2f/pipeline.h"
#include "s2f/tensor_file.h"

using namespace s2f;
namespace fs = std::filesystem;

namespace {

// A corpus and encoder small enough to run the whole pipeline in seconds.
const char *kTinyConfig =
    "synth.identities = 10\n"
    "synth.clips = 2\n"
    "synth.gallery_identities = 4\n"
    "synth.duration_s = 1\n"
    "synth.feature_dim = 24\n"
    "spectrogram.target_duration_s = 1\n"
    "encoder.conv_channels = 2 2 2 2 2 2 2 2 2\n"
    "encoder.fc_widths = 16 24\n"
    "adam.batch_size = 4\n"
    "adam.epochs = 1\n"
    "eval.ks = 1 2\n"
    "eval.collapse_identities = 4\n";

RunConfig Tiny() {
  RunConfig c;
  c.Apply(ParseKeyValues(kTinyConfig, "tiny"));
  c.Validate();
  return c;
}

int Run(const std::string &args) {
  const int status = std::system((std::string(S2F_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path Scratch(const std::string &name) {
  const fs::path p = fs::temp_directory_path() / ("s2f_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config layering and errors") {
    RunConfig c;
    c.Apply(ParseKeyValues("adam.batch_size = 4\n# comment\nloss.lambda2 = 50\n", "a.cfg"));
    c.Apply(ParseKeyValues("adam.batch_size = 16", "b.cfg"));
    CHECK(c.adam.batch_size == 16);
    CHECK(c.loss.lambda2 == 50.0);
    CHECK_THROWS_WITH_AS(c.Apply(ParseKeyValues("adam.nope = 1", "c.cfg")),
                         doctest::Contains("c.cfg"), ConfigError);
    CHECK_THROWS_AS(ParseKeyValues("no equals sign", "d.cfg"), ConfigError);
    CHECK_THROWS_AS(c.Set("adam.batch_size", "four"), ConfigError);

    RunConfig round;
    round.Apply(ParseKeyValues(c.ToText(), "dump"));
    CHECK(round.Hash() == c.Hash());
    CHECK(round.ToText() == c.ToText());

    RunConfig d = c;
    d.Set("spectrogram.target_duration_s", "3");
    CHECK(d.FrontendHash() == c.FrontendHash());
    CHECK(d.Hash() != c.Hash());
    d.Set("spectrogram.compression_exponent", "0.5");
    CHECK(d.FrontendHash() != c.FrontendHash());

    RunConfig bad;
    bad.Set("synth.feature_dim", "128");
    CHECK_THROWS_AS(bad.Validate(), ConfigError);
  }

  TEST_CASE("tensor file round trip") {
    TensorFile f;
    f.SetMeta("kind", "test");
    Tensor<float> a({2, 3});
    Tensor<double> b({4});
    for (std::size_t i = 0; i < 6; ++i) a[i] = 0.5f * static_cast<float>(i) - 1;
    for (std::size_t i = 0; i < 4; ++i) b[i] = 1.0 / (i + 1);
    f.Add("a", a);
    f.Add("b", b);
    const TensorFile g = TensorFile::Deserialize(f.Serialize());
    CHECK(g.Meta("kind") == "test");
    CHECK(MaxAbsDiff(g.GetF32("a"), a) == 0.0);
    CHECK(MaxAbsDiff(g.GetF64("b"), b) == 0.0);
    CHECK_THROWS_AS(g.GetF64("a"), Error);
    std::string bytes = f.Serialize();
    bytes.resize(bytes.size() - 3);
    CHECK_THROWS_AS(TensorFile::Deserialize(bytes), Error);
  }

  TEST_CASE("pipeline runs end to end and refuses mismatched artifacts") {
    const fs::path root = Scratch("pipeline");
    const RunConfig cfg = Tiny();
    BuildCorpus(cfg.synth, (root / "corpus").string());
    const Corpus corpus = Corpus::Load((root / "corpus").string());
    const SpecCache cache = RunPreprocess(cfg, corpus, (root / "spec").string());
    CHECK(cache.entries.size() == 10 * 2 + 4);
    CHECK(cache.Read(cache.entries[0]).data.shape() == Shape{98, 257, 2});

    const Checkpoint ck = RunTrain(cfg, corpus, cache, (root / "run").string());
    CHECK(ck.iteration == 4);  // 8 identities x 2 clips, batch 4, one epoch
    const EvalReport rep = RunEval(cfg, corpus, cache, ck);
    CHECK(rep.recall.gallery_size == 4);
    CHECK(rep.similarity.size() == 3);
    CHECK(rep.ToText() == RunEval(cfg, corpus, cache, ck).ToText());

    RunConfig other = cfg;
    other.Set("spectrogram.compression_exponent", "0.5");
    CHECK_THROWS_AS(RunTrain(other, corpus, cache, (root / "run2").string()), ArtifactMismatch);
    CHECK_THROWS_AS(RunEval(other, corpus, cache, ck), ArtifactMismatch);
    RunConfig reseeded = cfg;
    reseeded.Set("train.shuffle_seed", "9");
    CHECK_THROWS_AS(RunTrain(reseeded, corpus, cache, (root / "run3").string(), &ck),
                    ArtifactMismatch);
  }

  TEST_CASE("exit codes") {
    const fs::path root = Scratch("exit");
    const std::string tiny = (root / "tiny.cfg").string();
    std::ofstream(tiny) << kTinyConfig;
    CHECK(Run("--help") == 0);
    CHECK(Run("") == 1);
    CHECK(Run("synth --config " + tiny + " --set synth.bogus=1 --out " + (root / "c").string()) == 1);
    CHECK(Run("synth --config " + tiny + " --out " + (root / "c").string()) == 0);
    CHECK(Run("preprocess --config " + tiny + " --corpus " + (root / "c").string() + " --out " +
              (root / "s").string()) == 0);
    // Cache built with another frontend: a runtime refusal, not a usage error.
    CHECK(Run("train --config " + tiny + " --set spectrogram.compression_exponent=0.5 --corpus " +
              (root / "c").string() + " --cache " + (root / "s").string() + " --out " +
              (root / "r").string()) == 2);
    CHECK(Run("train --config " + tiny + " --corpus " + (root / "missing").string() + " --cache " +
              (root / "s").string() + " --out " + (root / "r").string()) == 2);
  }
}
