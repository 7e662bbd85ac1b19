// s2f/tests/test_synth.cc

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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "s2f/synth.h"

using namespace s2f;

namespace {

SynthConfig Small() {
  SynthConfig c;
  c.identities = 6;
  c.clips = 2;
  c.gallery_identities = 2;
  c.duration_s = 0.5;
  c.feature_dim = 32;
  return c;
}

}  // namespace

TEST_SUITE("synth_data") {
  TEST_CASE("rendering is deterministic per clip and identity-bound") {
    const SynthWorld world(SynthConfig{});
    const Latent z = world.LatentOf(17);
    CHECK(world.LatentOf(17) == z);
    CHECK(world.RenderVoice(z, 17, 3, 1.0).samples == world.RenderVoice(z, 17, 3, 1.0).samples);
    CHECK(world.RenderVoice(z, 17, 3, 1.0).samples != world.RenderVoice(z, 17, 4, 1.0).samples);
    CHECK(world.Feature(z) == SynthWorld(SynthConfig{}).Feature(z));

    const SynthDataset ds(world, Split::kTrain, 10, SpectrogramConfig{}, 6.0);
    REQUIRE(ds.size() == 1600);
    CHECK(ds.Identity(0) == ds.Identity(1));
    CHECK(ds.Target(0) == ds.Target(1));
    CHECK(ds.Audio(0).samples != ds.Audio(1).samples);
  }

  TEST_CASE("spectral peak sits at the mapped fundamental") {
    const SynthWorld world(SynthConfig{});
    Latent z{};
    z[0] = 6;  // fundamental control near its ceiling
    z[1] = 3;  // steep tilt
    z[2] = 2;  // boosted first harmonic
    const double f0 = world.F0(z);
    CHECK(f0 > 299);
    CHECK(f0 <= 300);
    SpectrogramConfig cfg;
    cfg.target_duration_s = 0;
    const CompressedSpectrogram s = Preprocess(world.RenderVoice(z, 1, 0, 2.0), cfg);
    std::vector<double> mag(s.bins());
    for (std::size_t t = 0; t < s.frames(); ++t)
      for (std::size_t k = 0; k < s.bins(); ++k) {
        const double re = s.data[(t * s.bins() + k) * 2], im = s.data[(t * s.bins() + k) * 2 + 1];
        mag[k] += std::hypot(re, im);
      }
    const auto peak = std::max_element(mag.begin(), mag.end()) - mag.begin();
    const double expect = f0 / (16000.0 / 512);
    CHECK(std::abs(static_cast<double>(peak) - expect) <= 1.0);
  }

  TEST_CASE("splits are identity-disjoint 80/10/10 with a trailing gallery") {
    const SynthWorld world(SynthConfig{});
    const auto train = world.Identities(Split::kTrain), val = world.Identities(Split::kVal),
               test = world.Identities(Split::kTest), gallery = world.Identities(Split::kGallery);
    CHECK(train.size() == 160);
    CHECK(val.size() == 20);
    CHECK(test.size() == 20);
    CHECK(gallery.size() == 100);
    std::set<int64_t> all(train.begin(), train.end());
    all.insert(val.begin(), val.end());
    all.insert(test.begin(), test.end());
    CHECK(all.size() == 200);
    CHECK(*all.rbegin() == 199);
    CHECK(gallery.front() == 200);
    CHECK(gallery.back() == 299);
    CHECK((train.size() + val.size() + test.size()) * 10 == 2000);
  }

  TEST_CASE("planted correlation between z0 and its strongest feature dimension") {
    const SynthWorld world(SynthConfig{});
    const auto col = world.FeatureColumn(0);
    const std::size_t j = std::max_element(col.begin(), col.end()) - col.begin();
    std::vector<double> z0, vj;
    for (int64_t id = 0; id < 200; ++id) {
      const Latent z = world.LatentOf(id);
      z0.push_back(z[0]);
      vj.push_back(world.Feature(z)[j]);
    }
    const PearsonResult p = Pearson(z0, vj);
    CHECK(p.r > 0.9);
  }

  TEST_CASE("latent decoding inverts the feature map") {
    const SynthWorld world(SynthConfig{});
    const Latent z = world.LatentOf(5);
    const Latent back = world.DecodeLatent(world.Feature(z));
    for (std::size_t i = 0; i < kLatentDim; ++i) CHECK(back[i] == doctest::Approx(z[i]).epsilon(1e-4));
    const auto a = world.Attributes(z);
    CHECK(a.at("group") == (z[0] >= 0 ? "A" : "B"));
  }

  TEST_CASE("corpus build is reproducible") {
    const auto root = std::filesystem::temp_directory_path() / "s2f_test_corpus";
    std::filesystem::remove_all(root);
    const DatasetManifest a = BuildCorpus(Small(), (root / "a").string());
    const DatasetManifest b = BuildCorpus(Small(), (root / "b").string());
    CHECK(a.Checksum() == b.Checksum());
    CHECK(a.samples.size() == 6 * 2 + 2);
    CHECK(DatasetManifest::FromText(a.ToText()).Checksum() == a.Checksum());
    for (const char *f : {"manifest.txt", "features.s2f", "attributes.csv", "landmarks/0.csv"})
      CHECK(std::filesystem::exists(root / "a" / f));
    SynthConfig other = Small();
    other.seed = 8;
    CHECK(SynthConfigHash(other) != SynthConfigHash(Small()));
    std::string text = a.ToText();
    text.replace(text.find("config_hash = ") + 14, 1, text[text.find("config_hash = ") + 14] == '0' ? "1" : "0");
    CHECK_THROWS_AS(DatasetManifest::FromText(text), Error);
    SynthConfig bad = Small();
    bad.identities = 2;
    CHECK_THROWS_AS(BuildCorpus(bad, (root / "c").string()), ConfigError);
  }
}

TEST_SUITE("synth_learnability") {
  TEST_CASE("ridge regression recovers the features from spectrogram averages") {
    const SynthWorld world(SynthConfig{});
    const SynthDataset train(world, Split::kTrain, 10, SpectrogramConfig{}, 6.0);
    const SynthDataset val(world, Split::kVal, 10, SpectrogramConfig{}, 6.0);
    const double r2 = RidgeLearnability(train, val);
    MESSAGE("ridge R^2 = " << r2);
    CHECK(r2 > 0.5);
  }
}
