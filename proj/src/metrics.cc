#include "rvqlab/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "rvqlab/error.h"
#include "rvqlab/mel.h"
#include "rvqlab/stft.h"

namespace rvqlab::metrics {
namespace {

struct Pair {
  AudioBuffer ref;
  AudioBuffer test;
};

Pair aligned(const AudioBuffer& ref, const AudioBuffer& test) {
  if (ref.sample_rate != test.sample_rate)
    fail(ErrorCode::kSampleRateMismatch, "reference at " + std::to_string(ref.sample_rate) +
                                             " Hz, test at " + std::to_string(test.sample_rate) +
                                             " Hz");
  validate(ref);
  validate(test);
  const auto n = std::min(ref.size(), test.size());
  if (n == 0) fail(ErrorCode::kEmptyInput, "metric of empty audio");
  Pair p{ref, test};
  p.ref.samples.resize(n);
  p.test.samples.resize(n);
  return p;
}

double nyquist_or(double f_max, int rate) { return f_max > 0 ? f_max : rate / 2.0; }

void check(const MultiScaleConfig& config) {
  if (config.scales.empty()) fail(ErrorCode::kInvalidConfig, "no spectral scales configured");
  if (!(config.floor > 0)) fail(ErrorCode::kInvalidConfig, "floor must be positive");
}

}  // namespace

std::size_t feasible_mels(int sample_rate, std::size_t fft_size, std::size_t requested,
                          double f_min, double f_max) {
  for (std::size_t n = requested; n > 0; --n) {
    try {
      dsp::mel_filterbank(sample_rate, fft_size, n, f_min, f_max);
      return n;
    } catch (const Error&) {
    }
  }
  return 0;
}

MultiScaleConfig default_multiscale(int sample_rate) {
  MultiScaleConfig c;
  const std::size_t ffts[] = {256, 512, 1024, 2048};
  const std::size_t mels[] = {40, 80, 160, 320};
  for (int i = 0; i < 4; ++i)
    c.scales.push_back({ffts[i], ffts[i] / 4,
                        feasible_mels(sample_rate, ffts[i], mels[i], 0.0, sample_rate / 2.0)});
  return c;
}

std::string describe(const MultiScaleConfig& config) {
  std::string out;
  char buf[96];
  for (std::size_t i = 0; i < config.scales.size(); ++i) {
    const auto& s = config.scales[i];
    std::snprintf(buf, sizeof buf, "%sfft=%zu/hop=%zu/mels=%zu", i ? "; " : "", s.fft_size,
                  s.hop, s.n_mels);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "; floor=%g", config.floor);
  return out + buf;
}

MetricValue mel_loss(const AudioBuffer& ref, const AudioBuffer& test,
                     const MultiScaleConfig& config) {
  check(config);
  const auto p = aligned(ref, test);
  const double f_max = nyquist_or(config.f_max, p.ref.sample_rate);
  double total = 0.0;
  for (const auto& s : config.scales) {
    if (s.n_mels == 0) continue;
    const dsp::StftConfig sc{s.fft_size, s.hop};
    const auto fb = dsp::mel_filterbank(p.ref.sample_rate, s.fft_size, s.n_mels, config.f_min,
                                        f_max);
    const Matrix a = dsp::log_mel(dsp::stft_magnitude(p.ref, sc), fb, config.floor);
    const Matrix b = dsp::log_mel(dsp::stft_magnitude(p.test, sc), fb, config.floor);
    total += (a - b).cwiseAbs().mean();
  }
  return {"mel", total, false};
}

MetricValue stft_loss(const AudioBuffer& ref, const AudioBuffer& test,
                      const MultiScaleConfig& config) {
  check(config);
  const auto p = aligned(ref, test);
  double total = 0.0;
  for (const auto& s : config.scales) {
    const dsp::StftConfig sc{s.fft_size, s.hop};
    const Matrix a = dsp::stft_magnitude(p.ref, sc).magnitudes;
    const Matrix b = dsp::stft_magnitude(p.test, sc).magnitudes;
    total += (a - b).cwiseAbs().mean();
  }
  return {"stft", total, false};
}

MetricValue snr(const AudioBuffer& ref, const AudioBuffer& test) {
  if (ref.size() != test.size())
    fail(ErrorCode::kInvalidInput, "snr needs equal lengths, got " + std::to_string(ref.size()) +
                                       " and " + std::to_string(test.size()));
  validate(ref);
  validate(test);
  double signal = 0.0, noise = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    signal += ref.samples[i] * ref.samples[i];
    const double e = ref.samples[i] - test.samples[i];
    noise += e * e;
  }
  if (signal <= 0) fail(ErrorCode::kInvalidInput, "snr of an all-zero reference");
  const double db = noise > 0 ? 10.0 * std::log10(signal / noise) : kSnrCapDb;
  return {"snr", std::min(db, kSnrCapDb), true};
}

}  // namespace rvqlab::metrics
