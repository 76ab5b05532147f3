#include "rvqlab/wav.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "binary_io.h"
#include "rvqlab/error.h"

namespace rvqlab {
namespace detail {

std::vector<std::uint8_t> read_file(const std::string& path) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::kMissingFile, path);
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIoError, "short write to " + path);
}

}  // namespace detail

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

bool tag_is(std::span<const std::uint8_t> tag, const char* expect) {
  return std::equal(tag.begin(), tag.end(), expect);
}

}  // namespace

AudioBuffer decode_wav(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, ErrorCode::kInvalidInput);
  if (!tag_is(r.get_bytes(4), "RIFF")) fail(ErrorCode::kInvalidInput, "not a RIFF file");
  r.get<std::uint32_t>();
  if (!tag_is(r.get_bytes(4), "WAVE")) fail(ErrorCode::kInvalidInput, "not a WAVE file");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  while (r.remaining() >= 8) {
    auto id = r.get_bytes(4);
    const auto size = r.get<std::uint32_t>();
    if (tag_is(id, "fmt ")) {
      if (size < 16) fail(ErrorCode::kInvalidInput, "fmt chunk too small");
      auto body = r.get_bytes(size);
      detail::ByteReader f(body, ErrorCode::kInvalidInput);
      format = f.get<std::uint16_t>();
      channels = f.get<std::uint16_t>();
      rate = f.get<std::uint32_t>();
      f.get<std::uint32_t>();
      f.get<std::uint16_t>();
      bits = f.get<std::uint16_t>();
      if (format == kFormatExtensible) {
        if (size < 40) fail(ErrorCode::kInvalidInput, "extensible fmt chunk too small");
        f.get<std::uint16_t>();
        f.get<std::uint16_t>();
        f.get<std::uint32_t>();
        format = f.get<std::uint16_t>();
      }
      have_fmt = true;
    } else if (tag_is(id, "data")) {
      if (!have_fmt) fail(ErrorCode::kInvalidInput, "data chunk before fmt chunk");
      if (channels != 1)
        fail(ErrorCode::kInvalidInput, "only mono WAV is supported, file has " +
                                           std::to_string(channels) + " channels");
      if (rate == 0) fail(ErrorCode::kInvalidInput, "zero sample rate");
      const std::size_t n = std::min<std::size_t>(size, r.remaining());
      auto data = r.get_bytes(n);
      AudioBuffer audio;
      audio.sample_rate = static_cast<int>(rate);
      detail::ByteReader d(data, ErrorCode::kInvalidInput);
      if (format == kFormatPcm && bits == 16) {
        audio.samples.resize(n / 2);
        for (double& s : audio.samples) s = d.get<std::int16_t>() / 32768.0;
      } else if (format == kFormatFloat && bits == 32) {
        audio.samples.resize(n / 4);
        for (double& s : audio.samples) s = d.get<float>();
      } else {
        fail(ErrorCode::kInvalidInput, "unsupported WAV encoding (format " +
                                           std::to_string(format) + ", " +
                                           std::to_string(bits) + " bits)");
      }
      validate(audio);
      return audio;
    } else {
      r.get_bytes(std::min<std::size_t>(size + (size & 1u), r.remaining()));
    }
  }
  fail(ErrorCode::kInvalidInput, "no data chunk");
}

std::vector<std::uint8_t> encode_wav(const AudioBuffer& audio, WavFormat format) {
  validate(audio);
  const std::uint16_t bits = format == WavFormat::kPcm16 ? 16 : 32;
  const std::uint16_t block = bits / 8;
  const auto data_size = static_cast<std::uint32_t>(audio.samples.size() * block);
  detail::ByteWriter w;
  w.put_bytes(std::span(reinterpret_cast<const std::uint8_t*>("RIFF"), 4));
  w.put<std::uint32_t>(36 + data_size);
  w.put_bytes(std::span(reinterpret_cast<const std::uint8_t*>("WAVEfmt "), 8));
  w.put<std::uint32_t>(16);
  w.put<std::uint16_t>(format == WavFormat::kPcm16 ? kFormatPcm : kFormatFloat);
  w.put<std::uint16_t>(1);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(audio.sample_rate));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(audio.sample_rate) * block);
  w.put<std::uint16_t>(block);
  w.put<std::uint16_t>(bits);
  w.put_bytes(std::span(reinterpret_cast<const std::uint8_t*>("data"), 4));
  w.put<std::uint32_t>(data_size);
  for (double s : audio.samples) {
    if (format == WavFormat::kPcm16) {
      const double scaled = std::round(std::clamp(s, -1.0, 1.0) * 32768.0);
      w.put(static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0)));
    } else {
      w.put(static_cast<float>(s));
    }
  }
  return std::move(w.bytes());
}

AudioBuffer read_wav(const std::string& path) {
  try {
    return decode_wav(detail::read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kMissingFile) throw;
    fail(e.code(), path + ": " + e.detail());
  }
}

void write_wav(const std::string& path, const AudioBuffer& audio, WavFormat format) {
  detail::write_file(path, encode_wav(audio, format));
}

}  // namespace rvqlab
