// s2f/base.h

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

#ifndef S2F_BASE_H_
#define S2F_BASE_H_

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace s2f {

/// Runtime failure inside the pipeline (bad shapes, degenerate data, IO).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration or usage; the CLI maps this to exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A verification step (gradient check, acceptance gate) failed.
class VerificationError : public Error {
 public:
  using Error::Error;
};

/// Counter-based generator: the n-th draw is a pure function of (key, n),
/// so any stream position can be reconstructed from its key and counter.
/// Output is bit-identical across platforms (no std:: distributions).
class CounterRng {
 public:
  explicit CounterRng(uint64_t key0, uint64_t key1 = 0, uint64_t key2 = 0)
      : key_(Mix(Mix(Mix(key0) ^ (key1 + 0x632be59bd9b4e019ULL)) ^
                 (key2 + 0x9e3779b97f4a7c15ULL))) {}

  uint64_t NextU64() { return Mix(key_ ^ (counter_++ * 0xd1b54a32d192ed03ULL)); }

  /// Uniform in the open interval (0, 1).
  double Uniform() {
    return (static_cast<double>(NextU64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  /// Standard normal via Box-Muller; consumes two counters per draw.
  double Gaussian() {
    double u1 = Uniform(), u2 = Uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  /// Uniform integer in [0, n).
  uint64_t Below(uint64_t n) { return n == 0 ? 0 : NextU64() % n; }

  uint64_t counter() const { return counter_; }

  static uint64_t Mix(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

 private:
  uint64_t key_;
  uint64_t counter_ = 0;
};

/// 64-bit FNV-1a; used for config hashes and checksums.
inline uint64_t Fnv1a64(std::string_view bytes, uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t Fnv1a64(const void *data, std::size_t n,
                        uint64_t h = 0xcbf29ce484222325ULL) {
  return Fnv1a64(std::string_view(static_cast<const char *>(data), n), h);
}

std::string HexU64(uint64_t v);

}  // namespace s2f

#endif  // S2F_BASE_H_
