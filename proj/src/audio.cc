#include "rvqlab/audio.h"

#include <cmath>
#include <string>

#include "rvqlab/error.h"

namespace rvqlab {

void validate(const AudioBuffer& audio) {
  if (audio.sample_rate <= 0)
    fail(ErrorCode::kInvalidInput, "sample rate must be positive, got " +
                                       std::to_string(audio.sample_rate));
  for (std::size_t i = 0; i < audio.samples.size(); ++i) {
    if (!std::isfinite(audio.samples[i]))
      fail(ErrorCode::kInvalidInput, "non-finite sample at index " + std::to_string(i));
  }
}

std::size_t reflect_index(long long i, std::size_t n) {
  if (n <= 1) return 0;
  const long long period = 2 * static_cast<long long>(n) - 2;
  long long m = i % period;
  if (m < 0) m += period;
  if (m >= static_cast<long long>(n)) m = period - m;
  return static_cast<std::size_t>(m);
}

std::vector<double> reflect_pad(std::span<const double> x, std::size_t before,
                                std::size_t after) {
  std::vector<double> out(x.size() + before + after, 0.0);
  if (x.empty()) return out;
  const long long offset = static_cast<long long>(before);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = x[reflect_index(static_cast<long long>(i) - offset, x.size())];
  return out;
}

double rms(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

AudioBuffer to_float32_precision(AudioBuffer audio) {
  for (double& v : audio.samples) v = static_cast<double>(static_cast<float>(v));
  return audio;
}

}  // namespace rvqlab
