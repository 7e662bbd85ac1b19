// s2f/trainer.cc

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

#include "s2f/trainer.h"

#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <sstream>

#include "s2f/tensor_file.h"

namespace s2f {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr const char *kFormatVersion = "1";

std::string Num(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

Tensor<float> BatchTargets(const std::vector<Example> &batch) {
  const std::size_t d = batch.at(0).target.size();
  Tensor<float> t({batch.size(), d});
  for (std::size_t n = 0; n < batch.size(); ++n) {
    if (batch[n].target.size() != d) throw Error("targets differ in width within a batch");
    std::copy(batch[n].target.begin(), batch[n].target.end(), t.data() + n * d);
  }
  return t;
}

Tensor<float> BatchInputs(const std::vector<Example> &batch) {
  std::vector<const CompressedSpectrogram *> specs;
  for (const Example &e : batch) specs.push_back(&e.spec);
  return StackSpectrograms(specs);
}

}  // namespace

void AdamConfig::Validate() const {
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1))
    throw ConfigError("adam: betas must lie in [0, 1)");
  if (!(epsilon > 0)) throw ConfigError("adam: epsilon must be positive");
  if (!(base_lr > 0)) throw ConfigError("adam: base_lr must be positive");
  if (!(decay_rate > 0 && decay_rate <= 1)) throw ConfigError("adam: decay_rate must lie in (0, 1]");
  if (decay_every == 0) throw ConfigError("adam: decay_every must be positive");
  if (batch_size == 0) throw ConfigError("adam: batch_size must be positive");
  if (epochs == 0) throw ConfigError("adam: epochs must be positive");
}

double LrAt(uint64_t step, const AdamConfig &cfg) {
  return cfg.base_lr * std::pow(cfg.decay_rate, static_cast<double>(step / cfg.decay_every));
}

template <typename Real>
void AdamStep(const std::vector<std::pair<std::string, Tensor<Real> *>> &params,
              const std::vector<const Tensor<Real> *> &grads, AdamState<Real> *state,
              const AdamConfig &cfg) {
  if (grads.size() != params.size()) throw Error("adam: gradient list does not match parameters");
  if (state->m.empty()) {
    for (const auto &p : params) {
      state->m.emplace_back(p.second->shape());
      state->v.emplace_back(p.second->shape());
    }
  }
  if (state->m.size() != params.size()) throw Error("adam: state does not match parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i] == nullptr) continue;
    if (grads[i]->shape() != params[i].second->shape())
      throw Error("adam: gradient shape mismatch at " + params[i].first);
    if (!grads[i]->AllFinite()) throw Error("non-finite gradient at " + params[i].first);
  }
  const double lr = LrAt(state->step, cfg);
  const double t = static_cast<double>(state->step + 1);
  const double c1 = 1.0 - std::pow(cfg.beta1, t), c2 = 1.0 - std::pow(cfg.beta2, t);
  const Real b1 = static_cast<Real>(cfg.beta1), b2 = static_cast<Real>(cfg.beta2);
  const Real a1 = static_cast<Real>(1.0 - cfg.beta1), a2 = static_cast<Real>(1.0 - cfg.beta2);
  const Real step_size = static_cast<Real>(lr / c1);
  const Real inv_c2 = static_cast<Real>(1.0 / c2);
  const Real eps = static_cast<Real>(cfg.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Real *__restrict p = params[i].second->data();
    Real *__restrict m = state->m[i].data();
    Real *__restrict v = state->v[i].data();
    const std::size_t n = params[i].second->size();
    if (grads[i] == nullptr) {
      for (std::size_t j = 0; j < n; ++j) {
        m[j] = b1 * m[j];
        v[j] = b2 * v[j];
        p[j] -= step_size * m[j] / (std::sqrt(v[j] * inv_c2) + eps);
      }
      continue;
    }
    const Real *__restrict g = grads[i]->data();
#pragma omp simd
    for (std::size_t j = 0; j < n; ++j) {
      m[j] = b1 * m[j] + a1 * g[j];
      v[j] = b2 * v[j] + a2 * g[j] * g[j];
      p[j] -= step_size * m[j] / (std::sqrt(v[j] * inv_c2) + eps);
    }
  }
  ++state->step;
}

template void AdamStep(const std::vector<std::pair<std::string, Tensor<float> *>> &,
                       const std::vector<const Tensor<float> *> &, AdamState<float> *,
                       const AdamConfig &);
template void AdamStep(const std::vector<std::pair<std::string, Tensor<double> *>> &,
                       const std::vector<const Tensor<double> *> &, AdamState<double> *,
                       const AdamConfig &);

std::string CurveCsv(const std::vector<CurveRow> &curve) {
  std::string out = "iteration,lr,total,term1,term2,term3,val_total\n";
  for (const CurveRow &r : curve)
    out += std::to_string(r.iteration) + "," + Num(r.lr) + "," + Num(r.train.total) + "," +
           Num(r.train.term1) + "," + Num(r.train.term2) + "," + Num(r.train.term3) + "," +
           Num(r.val_total) + "\n";
  return out;
}

void SaveCheckpoint(const std::string &path, const Checkpoint &ckpt) {
  TensorFile f;
  for (const auto &[k, v] : ckpt.meta) f.SetMeta(k, v);
  f.SetMeta("format_version", kFormatVersion);
  f.SetMeta("iteration", std::to_string(ckpt.iteration));
  f.SetMeta("adam.step", std::to_string(ckpt.adam.step));
  f.SetMeta("encoder.seed", std::to_string(ckpt.params.seed));
  f.SetMeta("encoder.input_freq", std::to_string(ckpt.params.input_freq));
  f.SetMeta("encoder.padding", "same (ceil(in/stride) outputs, extra pad before)");
  if (!ckpt.params.bn.empty()) {
    f.SetMeta("bn.epsilon", Num(ckpt.params.bn[0].epsilon));
    f.SetMeta("bn.momentum", Num(ckpt.params.bn[0].momentum));
  }
  const auto tensors = ckpt.params.AllTensors();
  for (const auto &[name, t] : tensors) f.Add("param." + name, *t);
  const auto trainable = ckpt.params.Trainable();
  for (std::size_t i = 0; i < ckpt.adam.m.size(); ++i) {
    f.Add("adam.m." + trainable.at(i).first, ckpt.adam.m[i]);
    f.Add("adam.v." + trainable.at(i).first, ckpt.adam.v[i]);
  }
  if (!ckpt.curve.empty()) {
    Tensor<double> c({ckpt.curve.size(), 7});
    for (std::size_t i = 0; i < ckpt.curve.size(); ++i) {
      const CurveRow &r = ckpt.curve[i];
      const double row[7] = {static_cast<double>(r.iteration), r.lr, r.train.total,
                             r.train.term1, r.train.term2, r.train.term3, r.val_total};
      std::copy(row, row + 7, c.data() + i * 7);
    }
    f.Add("curve", std::move(c));
  }
  try {
    f.Save(path);
  } catch (const Error &e) {
    throw Error(std::string("checkpoint write failed: ") + e.what());
  }
}

Checkpoint LoadCheckpoint(const std::string &path, const EncoderConfig &config) {
  const TensorFile f = TensorFile::Load(path);
  if (f.Meta("format_version") != kFormatVersion)
    throw Error(path + ": unsupported checkpoint version " + f.Meta("format_version"));
  Checkpoint c;
  c.meta = f.meta();
  c.iteration = std::stoull(f.Meta("iteration"));
  c.adam.step = std::stoull(f.Meta("adam.step"));
  c.params = BuildEncoder<float>(config, std::stoull(f.Meta("encoder.input_freq")),
                                 std::stoull(f.Meta("encoder.seed")));
  for (auto &[name, t] : c.params.AllTensors()) {
    const Tensor<float> &src = f.GetF32("param." + name);
    if (src.shape() != t->shape())
      throw Error(path + ": " + name + " has shape " + ShapeString(src.shape()) +
                  ", configuration expects " + ShapeString(t->shape()));
    *t = src;
  }
  if (f.HasMeta("bn.epsilon"))
    for (auto &s : c.params.bn) {
      s.epsilon = std::stod(f.Meta("bn.epsilon"));
      s.momentum = std::stod(f.Meta("bn.momentum"));
    }
  for (const auto &[name, t] : c.params.Trainable()) {
    if (!f.Has("adam.m." + name)) break;
    c.adam.m.push_back(f.GetF32("adam.m." + name));
    c.adam.v.push_back(f.GetF32("adam.v." + name));
  }
  if (f.Has("curve")) {
    const Tensor<double> &t = f.GetF64("curve");
    for (std::size_t i = 0; i < t.dim(0); ++i) {
      const double *r = t.data() + i * 7;
      CurveRow row;
      row.iteration = static_cast<uint64_t>(r[0]);
      row.lr = r[1];
      row.train = {r[2], r[3], r[4], r[5]};
      row.val_total = r[6];
      c.curve.push_back(row);
    }
  }
  return c;
}

uint64_t PlannedIterations(std::size_t dataset_size, const AdamConfig &cfg,
                           const TrainOptions &opt) {
  if (opt.max_iterations > 0) return opt.max_iterations;
  const uint64_t per_epoch = (dataset_size + cfg.batch_size - 1) / cfg.batch_size;
  return per_epoch * cfg.epochs;
}

std::vector<std::size_t> BatchIndices(uint64_t iteration, std::size_t dataset_size,
                                      std::size_t batch_size, uint64_t seed) {
  if (dataset_size == 0) throw Error("empty dataset");
  const uint64_t per_epoch = (dataset_size + batch_size - 1) / batch_size;
  const uint64_t epoch = iteration / per_epoch, slot = iteration % per_epoch;
  // Fisher-Yates over the whole epoch keeps batch composition a pure
  // function of (seed, epoch, slot).
  std::vector<std::size_t> perm(dataset_size);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  CounterRng rng(seed, epoch, Fnv1a64("shuffle"));
  for (std::size_t i = dataset_size; i > 1; --i) std::swap(perm[i - 1], perm[rng.Below(i)]);
  const std::size_t lo = slot * batch_size, hi = std::min(dataset_size, lo + batch_size);
  return {perm.begin() + static_cast<std::ptrdiff_t>(lo),
          perm.begin() + static_cast<std::ptrdiff_t>(hi)};
}

LossValues ValidationLoss(const EncoderParams<float> &params, const LossHeads<float> &heads,
                          const Dataset &data, const LossWeights &w, std::size_t batch_size) {
  if (data.size() == 0) throw Error("empty dataset");
  LossValues acc;
  for (std::size_t lo = 0; lo < data.size(); lo += batch_size) {
    std::vector<Example> batch;
    for (std::size_t i = lo; i < std::min(data.size(), lo + batch_size); ++i)
      batch.push_back(data.Get(i));
    const Tensor<float> pred = Encode(params, BatchInputs(batch));
    const LossValues v = EvaluateLoss(heads, BatchTargets(batch), pred, w);
    const double k = static_cast<double>(batch.size());
    acc.total += k * v.total;
    acc.term1 += k * v.term1;
    acc.term2 += k * v.term2;
    acc.term3 += k * v.term3;
  }
  const double n = static_cast<double>(data.size());
  return {acc.total / n, acc.term1 / n, acc.term2 / n, acc.term3 / n};
}

Checkpoint Train(const EncoderParams<float> &init, const LossHeads<float> &heads,
                 const Dataset &train, const Dataset *val, const AdamConfig &adam,
                 const LossWeights &weights, const TrainOptions &opt,
                 const Checkpoint *resume) {
  adam.Validate();
  weights.Validate();
  if (train.size() == 0) throw Error("empty dataset");
  Checkpoint ck;
  if (resume != nullptr) {
    ck = *resume;
    // A trailing validation-only row belongs to the interrupted run's end.
    while (!ck.curve.empty() && std::isnan(ck.curve.back().train.total)) ck.curve.pop_back();
  } else {
    ck.params = init;
  }
  ck.meta.insert(opt.checkpoint_meta.begin(), opt.checkpoint_meta.end());
  if (!opt.out_dir.empty()) std::filesystem::create_directories(opt.out_dir);
  const uint64_t head_sum = heads.Checksum();
  const uint64_t total = PlannedIterations(train.size(), adam, opt);

  auto write_outputs = [&](const std::string &name) {
    if (opt.out_dir.empty()) return;
    SaveCheckpoint(opt.out_dir + "/" + name, ck);
    WriteFileBytes(opt.out_dir + "/loss.csv", CurveCsv(ck.curve));
  };
  auto validate = [&]() {
    return val != nullptr && val->size() > 0
               ? ValidationLoss(ck.params, heads, *val, weights, adam.batch_size).total
               : kNaN;
  };

  for (uint64_t it = ck.iteration; it < total; ++it) {
    CurveRow row;
    row.iteration = it;
    row.lr = LrAt(ck.adam.step, adam);
    row.val_total = opt.val_every > 0 && it % opt.val_every == 0 ? validate() : kNaN;

    std::vector<Example> batch;
    for (std::size_t i : BatchIndices(it, train.size(), adam.batch_size, opt.seed))
      batch.push_back(train.Get(i));
    // Borrow() keeps a pointer, so inputs and targets must outlive the tape.
    const Tensor<float> inputs = BatchInputs(batch);
    const Tensor<float> targets = BatchTargets(batch);
    Tape<float> tape;
    const Var x = tape.Borrow(inputs);
    const EncoderGraph g = EncoderForward(tape, ck.params, x, Mode::kTrain);
    const LossGraph lg = TotalLoss(tape, heads, tape.Borrow(targets), g.output, weights);
    row.train = ReadLoss(tape, lg);
    tape.Backward(lg.total);
    std::vector<const Tensor<float> *> grads;
    for (Var p : g.params) grads.push_back(tape.FindGrad(p));
    AdamStep(ck.params.Trainable(), grads, &ck.adam, adam);
    ck.iteration = it + 1;

    ck.curve.push_back(row);
    if (opt.on_row) opt.on_row(row);
    if (opt.checkpoint_every > 0 && ck.iteration % opt.checkpoint_every == 0 &&
        ck.iteration < total)
      write_outputs("checkpoint_" + std::to_string(ck.iteration) + ".s2f");
  }
  if (heads.Checksum() != head_sum) throw VerificationError("loss heads changed during training");

  CurveRow last;
  last.iteration = ck.iteration;
  last.lr = LrAt(ck.adam.step, adam);
  last.train = {kNaN, kNaN, kNaN, kNaN};
  last.val_total = validate();
  ck.curve.push_back(last);
  if (opt.on_row) opt.on_row(last);
  write_outputs("checkpoint.s2f");
  return ck;
}

}  // namespace s2f
