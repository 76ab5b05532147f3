#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

#include "rvqlab/error.h"
#include "rvqlab/synth.h"
#include "rvqlab/wav.h"

namespace rvqlab {
namespace {

TEST(Wav, Float32RoundTripIsExactAtFloatPrecision) {
  const auto audio = to_float32_precision(synth::white_noise(1234, 24000, 0.9, 5));
  const auto back = decode_wav(encode_wav(audio, WavFormat::kFloat32));
  EXPECT_EQ(back, audio);
}

TEST(Wav, Pcm16RoundTripWithinHalfStep) {
  const auto audio = synth::white_noise(1000, 16000, 0.9, 6);
  const auto bytes = encode_wav(audio, WavFormat::kPcm16);
  EXPECT_EQ(bytes.size(), 44u + 2000u);
  const auto back = decode_wav(bytes);
  ASSERT_EQ(back.size(), audio.size());
  EXPECT_EQ(back.sample_rate, 16000);
  for (std::size_t i = 0; i < audio.size(); ++i)
    EXPECT_NEAR(back.samples[i], audio.samples[i], 0.5 / 32768.0 + 1e-12);
  // Re-encoding decoded PCM is lossless.
  EXPECT_EQ(encode_wav(back, WavFormat::kPcm16), bytes);
}

TEST(Wav, RejectsMultichannel) {
  auto bytes = encode_wav(synth::white_noise(100, 24000, 0.5, 1), WavFormat::kPcm16);
  const std::uint16_t stereo = 2;
  std::memcpy(bytes.data() + 22, &stereo, 2);
  try {
    decode_wav(bytes);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidInput);
    EXPECT_NE(std::string(e.what()).find("mono"), std::string::npos);
  }
}

TEST(Wav, RejectsGarbageAndMissingFiles) {
  std::vector<std::uint8_t> junk{'R', 'I', 'F', 'F', 1, 2};
  EXPECT_THROW(decode_wav(junk), Error);
  try {
    read_wav("/nonexistent/file.wav");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingFile);
  }
}

TEST(Wav, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "rvqlab_wav_test.wav";
  const auto audio = to_float32_precision(synth::sine(300.0, 0.1, 24000));
  write_wav(path.string(), audio);
  EXPECT_EQ(read_wav(path.string()), audio);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace rvqlab
