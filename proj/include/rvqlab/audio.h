#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rvqlab {

// Mono PCM signal. Samples are nominally in [-1, 1].
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate = 0;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  double duration_seconds() const noexcept {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }

  friend bool operator==(const AudioBuffer&, const AudioBuffer&) = default;
};

// Throws InvalidInput on non-finite samples or a nonpositive rate.
void validate(const AudioBuffer& audio);

// Index into a signal of length n with whole-sample symmetric reflection
// (x[-1] = x[1], x[n] = x[n-2]), folded repeatedly so any offset is valid.
std::size_t reflect_index(long long i, std::size_t n);

// Reflect-pads `before` samples in front and `after` samples behind.
std::vector<double> reflect_pad(std::span<const double> x, std::size_t before,
                                std::size_t after);

double rms(std::span<const double> x);

// Rounds every sample through IEEE float32, the codec's output sample format.
AudioBuffer to_float32_precision(AudioBuffer audio);

}  // namespace rvqlab
