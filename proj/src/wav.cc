// s2f/wav.cc

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

#include "s2f/wav.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

namespace s2f {
namespace {

uint16_t U16(const unsigned char *p) { return static_cast<uint16_t>(p[0] | (p[1] << 8)); }
uint32_t U32(const unsigned char *p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

void Put16(std::vector<unsigned char> *b, uint16_t v) {
  b->push_back(v & 0xff);
  b->push_back(v >> 8);
}
void Put32(std::vector<unsigned char> *b, uint32_t v) {
  for (int i = 0; i < 4; ++i) b->push_back((v >> (8 * i)) & 0xff);
}
void PutTag(std::vector<unsigned char> *b, const char *tag) { b->insert(b->end(), tag, tag + 4); }

}  // namespace

Waveform ReadWav(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
    throw Error(path + ": not a RIFF/WAVE file");

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  const unsigned char *data = nullptr;
  std::size_t data_len = 0;
  for (std::size_t pos = 12; pos + 8 <= buf.size();) {
    const unsigned char *chunk = buf.data() + pos;
    const std::size_t len = U32(chunk + 4);
    const std::size_t avail = std::min(len, buf.size() - pos - 8);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) throw Error(path + ": truncated fmt chunk");
      format = U16(chunk + 8);
      channels = U16(chunk + 10);
      rate = U32(chunk + 12);
      bits = U16(chunk + 22);
      // WAVE_FORMAT_EXTENSIBLE carries the real format in the subformat GUID.
      if (format == 0xfffe && avail >= 26) format = U16(chunk + 32);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_len = avail;
    }
    pos += 8 + len + (len & 1);
  }
  if (channels == 0 || rate == 0) throw Error(path + ": missing fmt chunk");
  if (data == nullptr) throw Error(path + ": missing data chunk");

  const bool pcm16 = format == 1 && bits == 16;
  const bool f32 = format == 3 && bits == 32;
  if (!pcm16 && !f32)
    throw Error(path + ": unsupported sample format " + std::to_string(format) + "/" +
                std::to_string(bits) + " bit");
  const std::size_t frame_bytes = static_cast<std::size_t>(channels) * (bits / 8);
  const std::size_t frames = data_len / frame_bytes;

  Waveform w;
  w.sample_rate_hz = static_cast<int>(rate);
  w.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    const unsigned char *p = data + i * frame_bytes;
    if (pcm16) {
      w.samples[i] = static_cast<int16_t>(U16(p)) / 32768.0;
    } else {
      uint32_t u = U32(p);
      float f;
      std::memcpy(&f, &u, 4);
      w.samples[i] = f;
    }
  }
  w.Validate();
  return w;
}

void WriteWav(const std::string &path, const Waveform &w, WavEncoding encoding) {
  w.Validate();
  const bool pcm16 = encoding == WavEncoding::kPcm16;
  const uint16_t bits = pcm16 ? 16 : 32;
  const auto data_len = static_cast<uint32_t>(w.samples.size() * (bits / 8));
  std::vector<unsigned char> b;
  b.reserve(44 + data_len);
  PutTag(&b, "RIFF");
  Put32(&b, 36 + data_len);
  PutTag(&b, "WAVE");
  PutTag(&b, "fmt ");
  Put32(&b, 16);
  Put16(&b, pcm16 ? 1 : 3);
  Put16(&b, 1);
  Put32(&b, static_cast<uint32_t>(w.sample_rate_hz));
  Put32(&b, static_cast<uint32_t>(w.sample_rate_hz) * (bits / 8));
  Put16(&b, bits / 8);
  Put16(&b, bits);
  PutTag(&b, "data");
  Put32(&b, data_len);
  for (double s : w.samples) {
    if (pcm16) {
      const double c = std::clamp(s, -1.0, 32767.0 / 32768.0);
      Put16(&b, static_cast<uint16_t>(static_cast<int16_t>(std::lround(c * 32768.0))));
    } else {
      const auto f = static_cast<float>(s);
      uint32_t u;
      std::memcpy(&u, &f, 4);
      Put32(&b, u);
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out.write(reinterpret_cast<const char *>(b.data()), static_cast<std::streamsize>(b.size()));
  if (!out) throw Error("short write to " + path);
}

}  // namespace s2f
