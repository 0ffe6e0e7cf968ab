#pragma once

#include <cstdint>
#include <vector>

#include "melmix/error.hpp"

namespace melmix {

struct Waveform {
  int sample_rate = 16000;
  std::vector<float> samples;  // in [-1, 1]
};

// PCM16 mono 16 kHz RIFF/WAVE only; samples are scaled by 1/32768.
Waveform read_wav(const std::vector<std::uint8_t>& bytes);

// Writes PCM16 mono; values are clipped to [-1, 1).
std::vector<std::uint8_t> encode_wav(const Waveform& w);

}  // namespace melmix
