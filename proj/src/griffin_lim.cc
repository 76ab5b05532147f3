#include "rvqlab/griffin_lim.h"

#include <cmath>
#include <numbers>
#include <random>

#include "rvqlab/error.h"

namespace rvqlab::dsp {
namespace {

double bin_weight(Eigen::Index k, Eigen::Index bins) {
  return (k == 0 || k == bins - 1) ? 1.0 : 2.0;
}

}  // namespace

double spectral_convergence(const ComplexMatrix& estimate, const Matrix& target) {
  if (estimate.rows() != target.rows() || estimate.cols() != target.cols())
    fail(ErrorCode::kInvalidInput, "spectral_convergence shape mismatch");
  double num = 0.0, den = 0.0;
  for (Eigen::Index t = 0; t < target.rows(); ++t) {
    for (Eigen::Index k = 0; k < target.cols(); ++k) {
      const double w = bin_weight(k, target.cols());
      const double d = std::abs(estimate(t, k)) - target(t, k);
      num += w * d * d;
      den += w * target(t, k) * target(t, k);
    }
  }
  return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

GriffinLimResult griffin_lim(const MagnitudeSpectrogram& target,
                             const GriffinLimOptions& options) {
  validate(target.config);
  if (options.iterations < 1)
    fail(ErrorCode::kInvalidInput, "griffin_lim needs at least one iteration");
  const Matrix& mag = target.magnitudes;
  if (mag.cols() != static_cast<Eigen::Index>(target.config.bins()))
    fail(ErrorCode::kInvalidConfig, "magnitude bin count does not match fft_size");
  if (mag.rows() == 0) fail(ErrorCode::kEmptyInput, "griffin_lim of an empty spectrogram");

  ComplexMatrix current = mag.cast<std::complex<double>>();
  if (options.random_initial_phase) {
    std::mt19937_64 rng(options.seed);
    for (Eigen::Index t = 0; t < mag.rows(); ++t)
      for (Eigen::Index k = 0; k < mag.cols(); ++k) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        current(t, k) = std::polar(mag(t, k), 2.0 * std::numbers::pi * u);
      }
  }

  const auto frames = static_cast<std::size_t>(mag.rows());
  GriffinLimResult result;
  result.spectral_convergence.reserve(static_cast<std::size_t>(options.iterations));
  std::vector<double> signal;
  for (int it = 0; it < options.iterations; ++it) {
    signal = overlap_add(current, target.config);
    const ComplexMatrix analysis = analyze_padded(signal, frames, target.config);
    result.spectral_convergence.push_back(spectral_convergence(analysis, mag));
    for (Eigen::Index t = 0; t < mag.rows(); ++t)
      for (Eigen::Index k = 0; k < mag.cols(); ++k) {
        const std::complex<double> z = analysis(t, k);
        const double a = std::abs(z);
        current(t, k) = a > 0.0 ? z * (mag(t, k) / a) : std::complex<double>(mag(t, k), 0.0);
      }
  }
  result.audio = crop_padded(signal, target.config, target.signal_length, target.sample_rate);
  return result;
}

}  // namespace rvqlab::dsp
