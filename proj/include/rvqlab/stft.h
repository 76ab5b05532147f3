#pragma once

#include <cstddef>
#include <vector>

#include "rvqlab/audio.h"
#include "rvqlab/matrix.h"

namespace rvqlab::dsp {

// Periodic Hann analysis window of length fft_size, centered frames with
// fft_size/2 samples of reflect padding on both sides.
struct StftConfig {
  std::size_t fft_size = 1024;
  std::size_t hop = 256;

  std::size_t bins() const noexcept { return fft_size / 2 + 1; }
  friend bool operator==(const StftConfig&, const StftConfig&) = default;
};

void validate(const StftConfig& config);

struct Spectrogram {
  ComplexMatrix frames;  // T x bins
  StftConfig config;
  int sample_rate = 0;
  std::size_t signal_length = 0;

  std::size_t frame_count() const noexcept { return static_cast<std::size_t>(frames.rows()); }
};

struct MagnitudeSpectrogram {
  Matrix magnitudes;  // T x bins
  StftConfig config;
  int sample_rate = 0;
  std::size_t signal_length = 0;

  std::size_t frame_count() const noexcept {
    return static_cast<std::size_t>(magnitudes.rows());
  }
};

std::vector<double> hann_window(std::size_t n);

// floor(length / hop) + 1 for the centered framing.
std::size_t frame_count(std::size_t length, const StftConfig& config);

Spectrogram stft(const AudioBuffer& audio, const StftConfig& config);
MagnitudeSpectrogram magnitude(const Spectrogram& spec);
MagnitudeSpectrogram stft_magnitude(const AudioBuffer& audio, const StftConfig& config);

// True when the squared window overlap-adds to a constant at this hop.
bool is_cola(const StftConfig& config);

// Weighted overlap-add inverse. Requires is_cola(config).
AudioBuffer istft(const Spectrogram& spec);

// Building blocks shared with Griffin-Lim. They work on the padded signal
// domain of length (T - 1) * hop + fft_size, where frame t starts at t * hop.
std::size_t padded_domain_length(std::size_t frames, const StftConfig& config);
std::vector<double> overlap_add(const ComplexMatrix& frames, const StftConfig& config);
ComplexMatrix analyze_padded(const std::vector<double>& padded, std::size_t frames,
                             const StftConfig& config);
AudioBuffer crop_padded(const std::vector<double>& padded, const StftConfig& config,
                        std::size_t signal_length, int sample_rate);

}  // namespace rvqlab::dsp
