// s2f/trainer.h

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

#ifndef S2F_TRAINER_H_
#define S2F_TRAINER_H_

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "s2f/dataset.h"
#include "s2f/encoder.h"
#include "s2f/loss.h"

namespace s2f {

struct AdamConfig {
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-4;
  double base_lr = 0.001;
  double decay_rate = 0.95;
  uint64_t decay_every = 10000;
  std::size_t batch_size = 8;
  std::size_t epochs = 3;

  void Validate() const;
};

/// base_lr * decay_rate^floor(step / decay_every).
double LrAt(uint64_t step, const AdamConfig &cfg);

template <typename Real>
struct AdamState {
  std::vector<Tensor<Real>> m, v;  // aligned with the parameter list
  uint64_t step = 0;               // updates applied so far
};

/// One bias-corrected ADAM update at learning rate LrAt(state->step).
/// A missing gradient (nullptr) counts as zero. Throws
/// "non-finite gradient at <name>" before touching any parameter.
template <typename Real>
void AdamStep(const std::vector<std::pair<std::string, Tensor<Real> *>> &params,
              const std::vector<const Tensor<Real> *> &grads, AdamState<Real> *state,
              const AdamConfig &cfg);

struct CurveRow {
  uint64_t iteration = 0;
  double lr = 0;
  LossValues train;     // NaN fields for the trailing validation-only row
  double val_total = 0; // NaN when no validation ran at this iteration
};

/// CSV with header iteration,lr,total,term1,term2,term3,val_total. NaN
/// values are written as empty fields.
std::string CurveCsv(const std::vector<CurveRow> &curve);

struct TrainOptions {
  uint64_t seed = 1;
  uint64_t val_every = 500;
  uint64_t checkpoint_every = 0;   // 0: final checkpoint only
  uint64_t max_iterations = 0;     // 0: epochs * ceil(|train| / batch)
  std::string out_dir;             // empty: no files written
  std::map<std::string, std::string> checkpoint_meta;  // copied into every checkpoint
  std::function<void(const CurveRow &)> on_row;        // progress hook
};

struct Checkpoint {
  EncoderParams<float> params;
  AdamState<float> adam;
  uint64_t iteration = 0;
  std::vector<CurveRow> curve;
  std::map<std::string, std::string> meta;
};

/// Tensor-file checkpoint. Metadata records iteration, ADAM step, BN
/// epsilon/momentum and the padding policy in addition to `ckpt.meta`.
void SaveCheckpoint(const std::string &path, const Checkpoint &ckpt);
/// `config` supplies the layer table; the stored tensors must match it.
Checkpoint LoadCheckpoint(const std::string &path, const EncoderConfig &config);

/// Total iterations a run with these settings performs.
uint64_t PlannedIterations(std::size_t dataset_size, const AdamConfig &cfg,
                           const TrainOptions &opt);

/// Indices visited at `iteration`: a per-epoch permutation from a counter
/// RNG keyed on (seed, epoch), cut into consecutive batches. The final
/// batch of an epoch may be short.
std::vector<std::size_t> BatchIndices(uint64_t iteration, std::size_t dataset_size,
                                      std::size_t batch_size, uint64_t seed);

/// Mean total loss over a dataset, BN in eval mode.
LossValues ValidationLoss(const EncoderParams<float> &params, const LossHeads<float> &heads,
                          const Dataset &data, const LossWeights &w, std::size_t batch_size);

/// Runs (or resumes) training. With `resume` set, its parameters, ADAM
/// state, curve and iteration counter replace `init`; the run then
/// continues exactly as an uninterrupted one would.
Checkpoint Train(const EncoderParams<float> &init, const LossHeads<float> &heads,
                 const Dataset &train, const Dataset *val, const AdamConfig &adam,
                 const LossWeights &weights, const TrainOptions &opt,
                 const Checkpoint *resume = nullptr);

}  // namespace s2f

#endif  // S2F_TRAINER_H_
