// s2f/tensor_file.cc

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

#include "s2f/tensor_file.h"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "tensor files are little-endian; big-endian hosts need byte swapping");

namespace s2f {
namespace {

constexpr char kMagic[8] = {'S', '2', 'F', 'T', 'N', 'S', 'R', '1'};
constexpr uint8_t kF32 = 1, kF64 = 2;

template <typename T>
void PutPod(std::string *out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out->append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string &bytes) : bytes_(bytes) {}

  template <typename T>
  T Pod() {
    Need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string Bytes(std::size_t n) {
    Need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  const char *Raw(std::size_t n) {
    Need(n);
    const char *p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  bool AtEnd() const { return pos_ == bytes_.size(); }

 private:
  void Need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error("tensor file truncated");
  }
  const std::string &bytes_;
  std::size_t pos_ = 0;
};

std::string EncodeMeta(const std::map<std::string, std::string> &meta) {
  std::string s;
  for (const auto &[k, v] : meta) s += k + "=" + v + "\n";
  return s;
}

std::map<std::string, std::string> DecodeMeta(const std::string &s) {
  std::map<std::string, std::string> meta;
  std::istringstream in(s);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("tensor file: malformed metadata line");
    meta[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return meta;
}

Shape ReadShape(Reader *r) {
  const auto rank = r->Pod<uint32_t>();
  if (rank == 0 || rank > 8) throw Error("tensor file: bad rank " + std::to_string(rank));
  Shape shape(rank);
  for (auto &d : shape) d = static_cast<std::size_t>(r->Pod<uint64_t>());
  return shape;
}

}  // namespace

void TensorFile::SetMeta(const std::string &key, const std::string &value) {
  if (key.empty() || key.find_first_of("=\n") != std::string::npos ||
      value.find('\n') != std::string::npos)
    throw Error("tensor file: invalid metadata entry '" + key + "'");
  meta_[key] = value;
}

const std::string &TensorFile::Meta(const std::string &key) const {
  auto it = meta_.find(key);
  if (it == meta_.end()) throw Error("tensor file: missing metadata '" + key + "'");
  return it->second;
}

void TensorFile::Add(const std::string &name, Tensor<float> t) {
  if (Has(name)) throw Error("tensor file: duplicate record '" + name + "'");
  records_.emplace_back(name, std::move(t));
}

void TensorFile::Add(const std::string &name, Tensor<double> t) {
  if (Has(name)) throw Error("tensor file: duplicate record '" + name + "'");
  records_.emplace_back(name, std::move(t));
}

bool TensorFile::Has(const std::string &name) const {
  for (const auto &r : records_)
    if (r.first == name) return true;
  return false;
}

const TensorFile::Entry &TensorFile::Find(const std::string &name) const {
  for (const auto &r : records_)
    if (r.first == name) return r.second;
  throw Error("tensor file: no record named '" + name + "'");
}

const Tensor<float> &TensorFile::GetF32(const std::string &name) const {
  const auto *t = std::get_if<Tensor<float>>(&Find(name));
  if (t == nullptr) throw Error("tensor file: record '" + name + "' is not f32");
  return *t;
}

const Tensor<double> &TensorFile::GetF64(const std::string &name) const {
  const auto *t = std::get_if<Tensor<double>>(&Find(name));
  if (t == nullptr) throw Error("tensor file: record '" + name + "' is not f64");
  return *t;
}

std::vector<std::string> TensorFile::names() const {
  std::vector<std::string> out;
  for (const auto &r : records_) out.push_back(r.first);
  return out;
}

std::string TensorFile::Serialize() const {
  std::string out(kMagic, sizeof(kMagic));
  PutPod<uint64_t>(&out, records_.size());
  const std::string meta = EncodeMeta(meta_);
  PutPod<uint32_t>(&out, static_cast<uint32_t>(meta.size()));
  out += meta;
  for (const auto &[name, entry] : records_) {
    PutPod<uint32_t>(&out, static_cast<uint32_t>(name.size()));
    out += name;
    std::visit(
        [&](const auto &t) {
          using T = typename std::decay_t<decltype(t)>::value_type;
          PutPod<uint8_t>(&out, std::is_same_v<T, float> ? kF32 : kF64);
          PutPod<uint32_t>(&out, static_cast<uint32_t>(t.rank()));
          for (std::size_t d : t.shape()) PutPod<uint64_t>(&out, d);
          out.append(reinterpret_cast<const char *>(t.data()), t.size() * sizeof(T));
        },
        entry);
  }
  return out;
}

TensorFile TensorFile::Deserialize(const std::string &bytes) {
  Reader r(bytes);
  if (r.Bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic)))
    throw Error("not a tensor file (bad magic)");
  TensorFile f;
  const auto count = r.Pod<uint64_t>();
  const auto meta_len = r.Pod<uint32_t>();
  f.meta_ = DecodeMeta(r.Bytes(meta_len));
  for (uint64_t i = 0; i < count; ++i) {
    const std::string name = r.Bytes(r.Pod<uint32_t>());
    const auto dtype = r.Pod<uint8_t>();
    Shape shape = ReadShape(&r);
    const std::size_t n = NumElements(shape);
    if (dtype == kF32) {
      std::vector<float> v(n);
      std::memcpy(v.data(), r.Raw(n * sizeof(float)), n * sizeof(float));
      f.Add(name, Tensor<float>(std::move(shape), std::move(v)));
    } else if (dtype == kF64) {
      std::vector<double> v(n);
      std::memcpy(v.data(), r.Raw(n * sizeof(double)), n * sizeof(double));
      f.Add(name, Tensor<double>(std::move(shape), std::move(v)));
    } else {
      throw Error("tensor file: unknown dtype code " + std::to_string(dtype));
    }
  }
  if (!r.AtEnd()) throw Error("tensor file: trailing bytes after last record");
  return f;
}

std::string ReadFileBytes(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void WriteFileBytes(const std::string &path, const std::string &bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error("short write to " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw Error("cannot rename " + tmp + " to " + path);
}

void TensorFile::Save(const std::string &path) const { WriteFileBytes(path, Serialize()); }

TensorFile TensorFile::Load(const std::string &path) {
  try {
    return Deserialize(ReadFileBytes(path));
  } catch (const Error &e) {
    throw Error(path + ": " + e.what());
  }
}

TensorFileHeader PeekTensorFile(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  // Header plus one record header fits comfortably in the first 64 KiB.
  std::string head(65536, '\0');
  in.read(head.data(), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  Reader r(head);
  if (r.Bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic)))
    throw Error(path + ": not a tensor file (bad magic)");
  TensorFileHeader h;
  h.records = r.Pod<uint64_t>();
  h.meta = DecodeMeta(r.Bytes(r.Pod<uint32_t>()));
  if (h.records > 0) {
    h.first_name = r.Bytes(r.Pod<uint32_t>());
    r.Pod<uint8_t>();
    h.first_shape = ReadShape(&r);
  }
  return h;
}

}  // namespace s2f
