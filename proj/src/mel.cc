#include "rvqlab/mel.h"

#include <cmath>
#include <string>

#include "rvqlab/error.h"

namespace rvqlab::dsp {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank mel_filterbank(int sample_rate, std::size_t fft_size, std::size_t n_mels,
                             double f_min, double f_max) {
  if (sample_rate <= 0) fail(ErrorCode::kInvalidConfig, "sample rate must be positive");
  if (fft_size < 2 || (fft_size & (fft_size - 1)) != 0)
    fail(ErrorCode::kInvalidConfig, "fft_size must be a power of two");
  if (n_mels < 1) fail(ErrorCode::kInvalidConfig, "n_mels must be >= 1");
  if (!(f_min >= 0.0 && f_min < f_max && f_max <= sample_rate / 2.0))
    fail(ErrorCode::kInvalidConfig, "require 0 <= f_min < f_max <= sample_rate / 2");

  const std::size_t bins = fft_size / 2 + 1;
  const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(fft_size);
  std::size_t available = 0;
  for (std::size_t k = 0; k < bins; ++k) {
    const double f = static_cast<double>(k) * bin_hz;
    if (f >= f_min && f <= f_max) ++available;
  }
  if (n_mels > available)
    fail(ErrorCode::kInvalidConfig, std::to_string(n_mels) + " mel bands requested but only " +
                                        std::to_string(available) +
                                        " FFT bins lie in [f_min, f_max]");

  const double m_lo = hz_to_mel(f_min);
  const double m_hi = hz_to_mel(f_max);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(m_lo + (m_hi - m_lo) * static_cast<double>(i) /
                                    static_cast<double>(n_mels + 1));

  MelFilterbank fb;
  fb.sample_rate = sample_rate;
  fb.fft_size = fft_size;
  fb.f_min = f_min;
  fb.f_max = f_max;
  fb.weights = Matrix::Zero(static_cast<Eigen::Index>(n_mels), static_cast<Eigen::Index>(bins));
  fb.center_hz.assign(edges.begin() + 1, edges.end() - 1);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    bool any = false;
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      const double w = std::max(0.0, std::min((f - lo) / (mid - lo), (hi - f) / (hi - mid)));
      fb.weights(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) = w;
      any = any || w > 0.0;
    }
    if (!any)
      fail(ErrorCode::kInvalidConfig, "mel band " + std::to_string(m) + " centered at " +
                                          std::to_string(mid) + " Hz covers no FFT bin");
  }
  return fb;
}

Matrix log_mel(const Matrix& magnitudes, const MelFilterbank& fb, double floor) {
  if (!(floor > 0.0)) fail(ErrorCode::kInvalidConfig, "log-mel floor must be positive");
  if (magnitudes.cols() != fb.weights.cols())
    fail(ErrorCode::kInvalidConfig,
         "spectrogram has " + std::to_string(magnitudes.cols()) + " bins, filterbank expects " +
             std::to_string(fb.weights.cols()));
  Matrix mel = magnitudes * fb.weights.transpose();
  return mel.unaryExpr([floor](double v) { return std::log(std::max(v, floor)); });
}

Matrix log_mel(const MagnitudeSpectrogram& spec, const MelFilterbank& fb, double floor) {
  if (spec.config.fft_size != fb.fft_size)
    fail(ErrorCode::kInvalidConfig, "filterbank fft_size does not match spectrogram");
  return log_mel(spec.magnitudes, fb, floor);
}

}  // namespace rvqlab::dsp
