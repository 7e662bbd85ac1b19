// s2f/tests/test_encoder.cc

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

#include <cmath>

#include "s2f/encoder.h"

using namespace s2f;

namespace {

EncoderConfig Desk() {
  EncoderConfig c;
  c.conv_channels = {2, 2, 4, 4, 4, 8, 16, 16, 16};
  return c;
}

Tensor<float> Input(std::size_t n, std::size_t t, uint64_t seed) {
  Tensor<float> x({n, 2, t, 257});
  CounterRng r(seed);
  FillGaussian(&x, &r, 0.3);
  return x;
}

}  // namespace

TEST_SUITE("voice_encoder") {
  TEST_CASE("shape trace for a 6 s input") {
    const EncoderConfig cfg;
    // Independent recurrence: same-padded convs give ceil(t / stride), the
    // 2/2 pools give floor(t / 2).
    std::size_t t = 598, f = 257;
    std::vector<std::size_t> times, freqs;
    for (std::size_t i = 0; i < 9; ++i) {
      const std::size_t s = cfg.conv_strides[i];
      t = (t + s - 1) / s;
      f = (f + s - 1) / s;
      times.push_back(t);
      freqs.push_back(f);
      if (i >= 2 && i <= 5) t /= 2;
    }
    std::vector<std::size_t> got_t, got_f;
    for (const LayerShape &l : ShapeTrace(cfg, 598, 257))
      if (l.name.rfind("conv", 0) == 0) {
        got_t.push_back(l.time);
        got_f.push_back(l.freq);
      }
    CHECK(got_t == times);
    CHECK(got_f == freqs);
    CHECK(times.back() == 10);
    CHECK(freqs.back() == 65);

    const auto trace = ShapeTrace(cfg, 598, 257);
    auto find = [&](const std::string &name) {
      for (const auto &l : trace)
        if (l.name == name) return l;
      FAIL("missing layer " << name);
      return trace.front();
    };
    CHECK(find("maxpool6").time == 37);
    CHECK(find("flatten").channels == 33280);
    CHECK(find("fc2").channels == 4096);
    CHECK(FlattenWidth(cfg, 257) == 512 * 65);
    // Four-wide kernel at stride 1 needs three padding cells, split 2 before, 1 after.
    CHECK(find("conv1").pad_t0 == 2);
    CHECK(find("conv1").pad_t1 == 1);
  }

  TEST_CASE("parameter shapes and count") {
    EncoderConfig cfg;
    cfg.fc_widths = {8, 8};  // keeps the test light; conv shapes are unchanged
    const auto p = BuildEncoder<float>(cfg, 257, 1);
    CHECK(p.conv_w[0].shape() == Shape{64, 2, 4, 4});
    CHECK(p.conv_w[8].shape() == Shape{512, 512, 4, 4});
    CHECK(p.fc_w[0].shape() == Shape{33280, 8});
    CHECK(p.bn.size() == 9);
    std::size_t expect = 0, cin = 2;
    for (std::size_t k : cfg.conv_channels) {
      expect += k * cin * 16 + k;
      cin = k;
    }
    expect += 2 * (2 * 64 + 3 * 128 + 256 + 3 * 512);  // BN gamma and beta
    expect += 33280 * 8 + 8 + 8 * 8 + 8;
    CHECK(p.NumParameters() == expect);
  }

  TEST_CASE("desk-scale forward for 6 s and 3 s inputs") {
    const auto p = BuildEncoder<float>(Desk(), 257, 3);
    CHECK(Encode(p, Input(2, 598, 1)).shape() == Shape{2, 4096});
    CHECK(Encode(p, Input(1, 298, 2)).shape() == Shape{1, 4096});
    CHECK(Encode(p, Input(1, 64, 3)).shape() == Shape{1, 4096});
  }

  TEST_CASE("short inputs are rejected with the failing layer") {
    EncoderConfig cfg = Desk();
    const auto p = BuildEncoder<float>(cfg, 257, 3);
    CHECK_THROWS_WITH_AS(Encode(p, Input(1, 63, 4)), doctest::Contains("minimum of 64"), Error);
    cfg.min_frames = 1;
    const auto q = BuildEncoder<float>(cfg, 257, 3);
    // 15 frames: pools give 7, 3, 1, then 0.
    CHECK_THROWS_WITH_AS(Encode(q, Input(1, 15, 5)),
                         doctest::Contains("time axis vanishes at maxpool6"), Error);
  }

  TEST_CASE("eval mode is per-example and seeding is deterministic") {
    const auto p = BuildEncoder<float>(Desk(), 257, 7);
    const auto same = BuildEncoder<float>(Desk(), 257, 7);
    const auto other = BuildEncoder<float>(Desk(), 257, 8);
    CHECK(MaxAbsDiff(p.conv_w[3], same.conv_w[3]) == 0.0);
    CHECK(MaxAbsDiff(p.conv_w[3], other.conv_w[3]) > 0.0);

    const Tensor<float> both = Input(2, 64, 9);
    Tensor<float> first({1, 2, 64, 257});
    std::copy(both.data(), both.data() + first.size(), first.data());
    const Tensor<float> a = Encode(p, both), b = Encode(p, first);
    double worst = 0;
    for (std::size_t j = 0; j < 4096; ++j) worst = std::max(worst, double(std::abs(a[j] - b[j])));
    CHECK(worst < 1e-4);
  }

  TEST_CASE("train-mode forward updates BN running statistics") {
    auto p = BuildEncoder<float>(Desk(), 257, 11);
    const Tensor<float> x = Input(2, 64, 12);
    Tape<float> tape;
    EncoderGraph g = EncoderForward(tape, p, tape.Borrow(x), Mode::kTrain);
    CHECK(tape.value(g.output).shape() == Shape{2, 4096});
    CHECK(g.params.size() == p.Trainable().size());
    CHECK(p.bn[0].running_var[0] != 1.0f);
  }

  TEST_CASE("stacking splits real and imaginary planes") {
    CompressedSpectrogram s;
    s.data = Tensor<float>({2, 3, 2});
    for (std::size_t i = 0; i < 12; ++i) s.data[i] = static_cast<float>(i);
    const Tensor<float> x = StackSpectrograms({&s});
    CHECK(x.shape() == Shape{1, 2, 2, 3});
    CHECK(x.at(0, 0, 1, 2) == 10.0f);
    CHECK(x.at(0, 1, 1, 2) == 11.0f);
    CHECK_THROWS_AS(StackSpectrograms({}), Error);
  }
}
