// s2f/tensor_file.h

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

// Binary container for named tensors.
//
//   "S2FTNSR1"                      8-byte magic
//   u64  record count
//   u32  metadata length, then that many bytes of "key=value\n" lines
//   per record:
//     u32 name length, name bytes (UTF-8)
//     u8  dtype (1 = f32, 2 = f64)
//     u32 rank, rank x u64 dims
//     raw little-endian element data
//
// Reading fails on a bad magic, a truncated record, or bytes left over after
// the declared record count.

#ifndef S2F_TENSOR_FILE_H_
#define S2F_TENSOR_FILE_H_

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "s2f/tensor.h"

namespace s2f {

class TensorFile {
 public:
  using Entry = std::variant<Tensor<float>, Tensor<double>>;

  void SetMeta(const std::string &key, const std::string &value);
  /// Throws if the key is absent.
  const std::string &Meta(const std::string &key) const;
  bool HasMeta(const std::string &key) const { return meta_.count(key) != 0; }
  const std::map<std::string, std::string> &meta() const { return meta_; }

  /// Appends a record; names must be unique.
  void Add(const std::string &name, Tensor<float> t);
  void Add(const std::string &name, Tensor<double> t);

  bool Has(const std::string &name) const;
  /// Throws on a missing name or a dtype mismatch.
  const Tensor<float> &GetF32(const std::string &name) const;
  const Tensor<double> &GetF64(const std::string &name) const;

  std::vector<std::string> names() const;

  std::string Serialize() const;
  static TensorFile Deserialize(const std::string &bytes);

  /// Writes via a temporary file and rename, so readers never see a
  /// partially written file.
  void Save(const std::string &path) const;
  static TensorFile Load(const std::string &path);

 private:
  const Entry &Find(const std::string &name) const;

  std::map<std::string, std::string> meta_;
  std::vector<std::pair<std::string, Entry>> records_;
};

/// Reads the header (magic, record count, metadata) and the shape of the
/// first record without loading element data.
struct TensorFileHeader {
  uint64_t records = 0;
  std::map<std::string, std::string> meta;
  std::string first_name;
  Shape first_shape;
};
TensorFileHeader PeekTensorFile(const std::string &path);

std::string ReadFileBytes(const std::string &path);
void WriteFileBytes(const std::string &path, const std::string &bytes);

}  // namespace s2f

#endif  // S2F_TENSOR_FILE_H_
