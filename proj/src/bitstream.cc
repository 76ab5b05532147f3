#include "rvqlab/bitstream.h"

#include <array>
#include <cstring>
#include <string>

#include "binary_io.h"
#include "rvqlab/error.h"

namespace rvqlab::bitstream {
namespace {

constexpr std::array<char, 4> kMagic{'R', 'V', 'Q', 'S'};

bool is_power_of_two(std::uint64_t n) { return n >= 2 && (n & (n - 1)) == 0; }

class BitWriter {
 public:
  explicit BitWriter(std::vector<std::uint8_t>& out) : out_(out) {}
  void write(std::uint32_t value, int bits) {
    for (int b = 0; b < bits; ++b) {
      if (used_ == 0) out_.push_back(0);
      if ((value >> b) & 1u) out_.back() |= static_cast<std::uint8_t>(1u << used_);
      used_ = (used_ + 1) % 8;
    }
  }

 private:
  std::vector<std::uint8_t>& out_;
  int used_ = 0;
};

class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> data) : data_(data) {}
  std::uint32_t read(int bits) {
    std::uint32_t v = 0;
    for (int b = 0; b < bits; ++b, ++pos_)
      v |= static_cast<std::uint32_t>((data_[pos_ / 8] >> (pos_ % 8)) & 1u) << b;
    return v;
  }
  std::size_t position() const noexcept { return pos_; }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace

std::size_t payload_bits(std::size_t frames, std::size_t stages, std::size_t codebook_size) {
  return frames * stages * static_cast<std::size_t>(rvq::bits_per_code(codebook_size));
}

std::size_t packed_size(std::size_t frames, std::size_t stages, std::size_t codebook_size) {
  return kHeaderSize + (payload_bits(frames, stages, codebook_size) + 7) / 8;
}

std::vector<std::uint8_t> pack(const rvq::TokenStream& tokens, int sample_rate) {
  const auto k = tokens.codebook_size;
  if (!is_power_of_two(k) || k > 32768)
    fail(ErrorCode::kInvalidInput, "codebook size " + std::to_string(k) +
                                       " is not a power of two in [2, 32768]");
  if (tokens.stages < 1 || tokens.stages > rvq::kMaxStages)
    fail(ErrorCode::kInvalidInput, "stage count must be in [1, 32]");
  if (sample_rate <= 0) fail(ErrorCode::kInvalidInput, "sample rate must be positive");
  if (tokens.frame_rate <= 0 || tokens.frame_rate > 65535)
    fail(ErrorCode::kInvalidInput, "frame rate does not fit the header");
  if (tokens.frames > 0xFFFFFFFFull) fail(ErrorCode::kInvalidInput, "too many frames");
  if (tokens.codes.size() != tokens.frames * tokens.stages)
    fail(ErrorCode::kInvalidInput, "token count does not match frames * stages");
  for (std::size_t i = 0; i < tokens.codes.size(); ++i)
    if (tokens.codes[i] >= k)
      fail(ErrorCode::kInvalidInput, "index " + std::to_string(tokens.codes[i]) + " at position " +
                                         std::to_string(i) + " overflows K = " +
                                         std::to_string(k));

  detail::ByteWriter w;
  w.put_bytes({reinterpret_cast<const std::uint8_t*>(kMagic.data()), kMagic.size()});
  w.put(kVersion);
  w.put(static_cast<std::uint32_t>(sample_rate));
  w.put(static_cast<std::uint16_t>(tokens.frame_rate));
  w.put(static_cast<std::uint16_t>(k));
  w.put(static_cast<std::uint8_t>(tokens.stages));
  w.put(static_cast<std::uint32_t>(tokens.frames));
  auto& out = w.bytes();
  out.reserve(packed_size(tokens.frames, tokens.stages, k));
  BitWriter bits(out);
  const int width = rvq::bits_per_code(k);
  for (auto code : tokens.codes) bits.write(code, width);
  return std::move(out);
}

Decoded unpack(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagic.size() ||
      std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0)
    fail(ErrorCode::kNotABitstream, "missing RVQS magic");
  if (bytes.size() < kHeaderSize)
    fail(ErrorCode::kTruncated, "header: expected " + std::to_string(kHeaderSize) +
                                    " bytes, got " + std::to_string(bytes.size()));
  detail::ByteReader r(bytes.subspan(kMagic.size()), ErrorCode::kTruncated);
  Decoded d;
  auto& h = d.header;
  h.version = r.get<std::uint16_t>();
  h.sample_rate = r.get<std::uint32_t>();
  h.frame_rate = r.get<std::uint16_t>();
  h.codebook_size = r.get<std::uint16_t>();
  h.stages = r.get<std::uint8_t>();
  h.frames = r.get<std::uint32_t>();
  if (h.version != kVersion)
    fail(ErrorCode::kNotABitstream, "unsupported stream version " + std::to_string(h.version));
  if (h.sample_rate == 0 || h.frame_rate == 0)
    fail(ErrorCode::kNotABitstream, "zero sample or frame rate");
  if (!is_power_of_two(h.codebook_size))
    fail(ErrorCode::kNotABitstream,
         "codebook size " + std::to_string(h.codebook_size) + " is not a power of two");
  if (h.stages < 1 || h.stages > rvq::kMaxStages)
    fail(ErrorCode::kNotABitstream, "stage count " + std::to_string(h.stages) + " out of range");

  const std::uint64_t bits = static_cast<std::uint64_t>(h.frames) * h.stages *
                             static_cast<std::uint64_t>(rvq::bits_per_code(h.codebook_size));
  const std::uint64_t expected = (bits + 7) / 8;
  const auto payload = bytes.subspan(kHeaderSize);
  if (payload.size() < expected)
    fail(ErrorCode::kTruncated, "payload: expected " + std::to_string(expected) +
                                    " bytes, got " + std::to_string(payload.size()));
  if (payload.size() > expected)
    fail(ErrorCode::kCorruptPadding, std::to_string(payload.size() - expected) +
                                         " bytes after the payload");
  if (bits % 8 != 0) {
    const auto last = payload[static_cast<std::size_t>(expected - 1)];
    if (last >> (bits % 8))
      fail(ErrorCode::kCorruptPadding, "nonzero padding bits");
  }

  auto& t = d.tokens;
  t.frames = h.frames;
  t.stages = h.stages;
  t.codebook_size = h.codebook_size;
  t.frame_rate = h.frame_rate;
  t.codes.resize(t.frames * t.stages);
  BitReader reader(payload);
  const int width = rvq::bits_per_code(h.codebook_size);
  for (auto& code : t.codes) code = static_cast<std::uint16_t>(reader.read(width));
  return d;
}

std::vector<std::uint8_t> prefix(std::span<const std::uint8_t> bytes, std::size_t q) {
  const auto d = unpack(bytes);
  if (q < 1 || q > d.header.stages)
    fail(ErrorCode::kInvalidInput, "prefix of " + std::to_string(q) + " stages from a " +
                                       std::to_string(d.header.stages) + "-stage stream");
  return pack(d.tokens.prefix(q), static_cast<int>(d.header.sample_rate));
}

}  // namespace rvqlab::bitstream
