#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rvqlab/audio.h"

namespace rvqlab::metrics {

struct MetricValue {
  std::string name;
  double value = 0.0;
  bool higher_is_better = false;
};

// n_mels == 0 means the scale only contributes to the STFT loss.
struct Scale {
  std::size_t fft_size = 1024;
  std::size_t hop = 256;
  std::size_t n_mels = 0;

  friend bool operator==(const Scale&, const Scale&) = default;
};

struct MultiScaleConfig {
  std::vector<Scale> scales;
  double floor = 1e-5;
  double f_min = 0.0;
  double f_max = 0.0;  // 0 = Nyquist

  friend bool operator==(const MultiScaleConfig&, const MultiScaleConfig&) = default;
};

// fft {256, 512, 1024, 2048}, hop fft/4, mels {40, 80, 160, 320} reduced to
// the largest count the sample rate and FFT size can support.
MultiScaleConfig default_multiscale(int sample_rate);

// Largest n <= requested for which every mel band covers at least one bin.
std::size_t feasible_mels(int sample_rate, std::size_t fft_size, std::size_t requested,
                          double f_min, double f_max);

std::string describe(const MultiScaleConfig& config);

// Sum over scales of the mean absolute log-mel difference. Signals are
// truncated to the shorter length.
MetricValue mel_loss(const AudioBuffer& ref, const AudioBuffer& test,
                     const MultiScaleConfig& config);

// Sum over scales of the mean absolute STFT magnitude difference.
MetricValue stft_loss(const AudioBuffer& ref, const AudioBuffer& test,
                      const MultiScaleConfig& config);

inline constexpr double kSnrCapDb = 120.0;

// 10 log10(sum ref^2 / sum (ref - test)^2), capped at 120 dB.
MetricValue snr(const AudioBuffer& ref, const AudioBuffer& test);

}  // namespace rvqlab::metrics
