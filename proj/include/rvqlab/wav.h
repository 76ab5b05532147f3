#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rvqlab/audio.h"

namespace rvqlab {

enum class WavFormat { kPcm16, kFloat32 };

// Mono 16-bit PCM or IEEE float32 only; anything else is InvalidInput.
AudioBuffer decode_wav(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_wav(const AudioBuffer& audio, WavFormat format);

AudioBuffer read_wav(const std::string& path);
void write_wav(const std::string& path, const AudioBuffer& audio,
               WavFormat format = WavFormat::kFloat32);

}  // namespace rvqlab
