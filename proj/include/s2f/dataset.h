// s2f/dataset.h

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

#ifndef S2F_DATASET_H_
#define S2F_DATASET_H_

#include <cstdint>
#include <vector>

#include "s2f/audio.h"

namespace s2f {

/// One (spectrogram, target feature) pair.
struct Example {
  CompressedSpectrogram spec;
  std::vector<float> target;
  int64_t identity = -1;
};

/// Random-access, deterministic source of examples. Get() must return the
/// same bytes for the same index on every call.
class Dataset {
 public:
  virtual ~Dataset() = default;
  virtual std::size_t size() const = 0;
  virtual Example Get(std::size_t i) const = 0;
  /// Target feature only; cheaper than Get() for most sources.
  virtual std::vector<float> Target(std::size_t i) const { return Get(i).target; }
  virtual int64_t Identity(std::size_t i) const { return Get(i).identity; }
};

class InMemoryDataset : public Dataset {
 public:
  InMemoryDataset() = default;
  explicit InMemoryDataset(std::vector<Example> examples) : examples_(std::move(examples)) {}

  void Add(Example e) { examples_.push_back(std::move(e)); }
  std::size_t size() const override { return examples_.size(); }
  Example Get(std::size_t i) const override { return examples_.at(i); }
  std::vector<float> Target(std::size_t i) const override { return examples_.at(i).target; }
  int64_t Identity(std::size_t i) const override { return examples_.at(i).identity; }

 private:
  std::vector<Example> examples_;
};

}  // namespace s2f

#endif  // S2F_DATASET_H_
