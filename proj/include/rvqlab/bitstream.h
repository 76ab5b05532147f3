#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rvqlab/rvq.h"

namespace rvqlab::bitstream {

inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 19;

// Layout (.rvqs), little-endian:
//   magic "RVQS" | version u16 | sample_rate u32 | frame_rate u16 | K u16 |
//   q u8 | T u32 | payload
// The payload holds T*q codes, frame-major (all stages of frame 0 first),
// log2(K) bits each, written LSB-first into consecutive bytes, and padded
// with zero bits to a whole byte.
struct StreamHeader {
  std::uint16_t version = kVersion;
  std::uint32_t sample_rate = 0;
  std::uint16_t frame_rate = 0;
  std::uint16_t codebook_size = 0;
  std::uint8_t stages = 0;
  std::uint32_t frames = 0;

  friend bool operator==(const StreamHeader&, const StreamHeader&) = default;
};

struct Decoded {
  StreamHeader header;
  rvq::TokenStream tokens;
};

std::size_t payload_bits(std::size_t frames, std::size_t stages, std::size_t codebook_size);
std::size_t packed_size(std::size_t frames, std::size_t stages, std::size_t codebook_size);

// InvalidInput on an index >= K or fields that do not fit the header.
std::vector<std::uint8_t> pack(const rvq::TokenStream& tokens, int sample_rate);

// NotABitstream for a bad magic, version or header field; Truncated when the
// payload is short; CorruptPadding for nonzero pad bits or trailing bytes.
Decoded unpack(std::span<const std::uint8_t> bytes);

// Re-packs the first q codes of every frame. InvalidInput if q exceeds the
// stream's stage count.
std::vector<std::uint8_t> prefix(std::span<const std::uint8_t> bytes, std::size_t q);

}  // namespace rvqlab::bitstream
