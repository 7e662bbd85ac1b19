// s2f/wav.h

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

#ifndef S2F_WAV_H_
#define S2F_WAV_H_

#include <string>

#include "s2f/audio.h"

namespace s2f {

/// Reads a RIFF/WAVE file holding 16-bit PCM or 32-bit IEEE float samples.
/// Multi-channel files yield channel 0 only. PCM is scaled by 1/32768.
Waveform ReadWav(const std::string &path);

enum class WavEncoding { kPcm16, kFloat32 };

/// Writes a mono file. PCM16 output is clipped to [-1, 1).
void WriteWav(const std::string &path, const Waveform &w,
              WavEncoding encoding = WavEncoding::kFloat32);

}  // namespace s2f

#endif  // S2F_WAV_H_
