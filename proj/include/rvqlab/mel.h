#pragma once

#include <cstddef>
#include <vector>

#include "rvqlab/matrix.h"
#include "rvqlab/stft.h"

namespace rvqlab::dsp {

// HTK mel scale: m = 2595 log10(1 + f / 700).
double hz_to_mel(double hz);
double mel_to_hz(double mel);

struct MelFilterbank {
  Matrix weights;  // n_mels x (fft_size / 2 + 1), nonnegative
  int sample_rate = 0;
  std::size_t fft_size = 0;
  double f_min = 0.0;
  double f_max = 0.0;
  std::vector<double> center_hz;

  std::size_t n_mels() const noexcept { return static_cast<std::size_t>(weights.rows()); }
};

// Unit-peak triangles with centers equally spaced in mel between f_min and
// f_max. InvalidConfig when a band would cover no FFT bin.
MelFilterbank mel_filterbank(int sample_rate, std::size_t fft_size, std::size_t n_mels,
                             double f_min, double f_max);

// ln(max(magnitudes * fb^T, floor)), T x n_mels.
Matrix log_mel(const Matrix& magnitudes, const MelFilterbank& fb, double floor);
Matrix log_mel(const MagnitudeSpectrogram& spec, const MelFilterbank& fb, double floor);

}  // namespace rvqlab::dsp
