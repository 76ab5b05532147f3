#include "rvqlab/stft.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "rvqlab/error.h"
#include "rvqlab/fft.h"

namespace rvqlab::dsp {

void validate(const StftConfig& config) {
  const auto n = config.fft_size;
  if (n < 2 || (n & (n - 1)) != 0)
    fail(ErrorCode::kInvalidConfig,
         "fft_size must be a power of two, got " + std::to_string(n));
  if (config.hop == 0 || config.hop > n)
    fail(ErrorCode::kInvalidConfig, "hop must be in (0, fft_size], got " +
                                        std::to_string(config.hop));
}

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(n));
  return w;
}

std::size_t frame_count(std::size_t length, const StftConfig& config) {
  return length / config.hop + 1;
}

std::size_t padded_domain_length(std::size_t frames, const StftConfig& config) {
  return frames == 0 ? 0 : (frames - 1) * config.hop + config.fft_size;
}

ComplexMatrix analyze_padded(const std::vector<double>& padded, std::size_t frames,
                             const StftConfig& config) {
  const auto n = config.fft_size;
  const auto window = hann_window(n);
  auto& fft = real_fft(n);
  ComplexMatrix out(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(config.bins()));
  std::vector<double> buf(n);
  std::vector<std::complex<double>> spec(config.bins());
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t start = t * config.hop;
    for (std::size_t i = 0; i < n; ++i)
      buf[i] = start + i < padded.size() ? padded[start + i] * window[i] : 0.0;
    fft.forward(buf, spec);
    for (std::size_t k = 0; k < spec.size(); ++k)
      out(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) = spec[k];
  }
  return out;
}

Spectrogram stft(const AudioBuffer& audio, const StftConfig& config) {
  validate(config);
  if (audio.empty()) fail(ErrorCode::kEmptyInput, "stft of empty audio");
  const auto pad = config.fft_size / 2;
  const auto padded = reflect_pad(audio.samples, pad, pad);
  Spectrogram spec;
  spec.config = config;
  spec.sample_rate = audio.sample_rate;
  spec.signal_length = audio.size();
  spec.frames = analyze_padded(padded, frame_count(audio.size(), config), config);
  return spec;
}

MagnitudeSpectrogram magnitude(const Spectrogram& spec) {
  MagnitudeSpectrogram mag;
  mag.magnitudes = spec.frames.cwiseAbs();
  mag.config = spec.config;
  mag.sample_rate = spec.sample_rate;
  mag.signal_length = spec.signal_length;
  return mag;
}

MagnitudeSpectrogram stft_magnitude(const AudioBuffer& audio, const StftConfig& config) {
  return magnitude(stft(audio, config));
}

bool is_cola(const StftConfig& config) {
  validate(config);
  const auto w = hann_window(config.fft_size);
  std::vector<double> sums(config.hop, 0.0);
  for (std::size_t i = 0; i < w.size(); ++i) sums[i % config.hop] += w[i] * w[i];
  const auto [lo, hi] = std::minmax_element(sums.begin(), sums.end());
  return *hi > 0.0 && (*hi - *lo) <= 1e-9 * *hi;
}

std::vector<double> overlap_add(const ComplexMatrix& frames, const StftConfig& config) {
  const auto n = config.fft_size;
  const auto count = static_cast<std::size_t>(frames.rows());
  const auto window = hann_window(n);
  auto& fft = real_fft(n);
  std::vector<double> out(padded_domain_length(count, config), 0.0);
  std::vector<double> weight(out.size(), 0.0);
  std::vector<std::complex<double>> spec(config.bins());
  std::vector<double> buf(n);
  for (std::size_t t = 0; t < count; ++t) {
    for (std::size_t k = 0; k < spec.size(); ++k)
      spec[k] = frames(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k));
    fft.inverse(spec, buf);
    const std::size_t start = t * config.hop;
    for (std::size_t i = 0; i < n; ++i) {
      out[start + i] += window[i] * buf[i];
      weight[start + i] += window[i] * window[i];
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = weight[i] > 0.0 ? out[i] / weight[i] : 0.0;
  return out;
}

AudioBuffer crop_padded(const std::vector<double>& padded, const StftConfig& config,
                        std::size_t signal_length, int sample_rate) {
  AudioBuffer audio;
  audio.sample_rate = sample_rate;
  audio.samples.assign(signal_length, 0.0);
  const auto pad = config.fft_size / 2;
  for (std::size_t i = 0; i < signal_length && pad + i < padded.size(); ++i)
    audio.samples[i] = padded[pad + i];
  return audio;
}

AudioBuffer istft(const Spectrogram& spec) {
  if (!is_cola(spec.config))
    fail(ErrorCode::kInvalidConfig,
         "window/hop pair is not constant-overlap-add (fft " +
             std::to_string(spec.config.fft_size) + ", hop " +
             std::to_string(spec.config.hop) + ")");
  if (spec.frames.cols() != static_cast<Eigen::Index>(spec.config.bins()))
    fail(ErrorCode::kInvalidConfig, "spectrogram bin count does not match fft_size");
  return crop_padded(overlap_add(spec.frames, spec.config), spec.config,
                     spec.signal_length, spec.sample_rate);
}

}  // namespace rvqlab::dsp
