#include "rvqlab/synth.h"

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "random.h"

namespace rvqlab::synth {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

using detail::Rng;

// Two-pole resonator with unity gain at its center frequency.
class Resonator {
 public:
  void tune(double freq, double bandwidth, double rate) {
    const double r = std::exp(-std::numbers::pi * bandwidth / rate);
    const double theta = kTwoPi * freq / rate;
    a1_ = 2.0 * r * std::cos(theta);
    a2_ = -r * r;
    gain_ = (1.0 - r) * std::sqrt(1.0 - 2.0 * r * std::cos(2.0 * theta) + r * r);
  }
  double process(double x) {
    const double y = gain_ * x + a1_ * y1_ + a2_ * y2_;
    y2_ = y1_;
    y1_ = y;
    return y;
  }

 private:
  double a1_ = 0.0, a2_ = 0.0, gain_ = 1.0, y1_ = 0.0, y2_ = 0.0;
};

struct Vowel {
  std::array<double, 4> formants;
};

constexpr std::array<Vowel, 7> kVowels{{
    {{730, 1090, 2440, 3500}},
    {{270, 2290, 3010, 3700}},
    {{300, 870, 2240, 3400}},
    {{530, 1840, 2480, 3500}},
    {{570, 840, 2410, 3400}},
    {{660, 1720, 2410, 3500}},
    {{490, 1350, 1690, 3300}},
}};
constexpr std::array<double, 4> kBandwidths{70, 100, 140, 200};
constexpr std::array<double, 4> kFormantGains{1.0, 0.6, 0.3, 0.15};

void normalize_rms(std::vector<double>& x, double target) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  const double current = x.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(x.size()));
  if (current <= 0.0) return;
  const double g = target / current;
  for (double& v : x) v *= g;
}

}  // namespace

AudioBuffer speech_like(const SpeechOptions& options, std::uint64_t seed) {
  Rng rng(seed);
  const double fs = options.sample_rate;
  const auto total = static_cast<std::size_t>(std::llround(options.duration_seconds * fs));
  std::vector<double> out(total, 0.0);

  const double speaker_f0 = rng.uniform(95.0, 230.0);
  const double formant_scale = speaker_f0 > 160.0 ? rng.uniform(1.08, 1.2) : rng.uniform(0.95, 1.05);

  std::array<Resonator, 4> tract;
  Resonator fricative_shape;
  double glottal_lp = 0.0;
  double phase = 0.0;
  std::size_t pos = static_cast<std::size_t>(rng.uniform(0.02, 0.15) * fs);
  std::array<double, 4> formants = kVowels[0].formants;

  while (pos < total) {
    const int syllables = 1 + static_cast<int>(rng.uniform() * 3.0);
    for (int s = 0; s < syllables && pos < total; ++s) {
      if (rng.uniform() < 0.55) {
        // Fricative: shaped noise burst.
        const auto len = static_cast<std::size_t>(rng.uniform(0.04, 0.11) * fs);
        fricative_shape.tune(rng.uniform(2500.0, std::min(7000.0, 0.4 * fs)), 1500.0, fs);
        const double amp = rng.uniform(0.15, 0.4);
        for (std::size_t i = 0; i < len && pos < total; ++i, ++pos) {
          const double env = std::sin(std::numbers::pi * static_cast<double>(i) / len);
          out[pos] += amp * env * fricative_shape.process(rng.gaussian());
        }
      }
      const Vowel& from = kVowels[static_cast<std::size_t>(rng.uniform() * kVowels.size())];
      const Vowel& to = kVowels[static_cast<std::size_t>(rng.uniform() * kVowels.size())];
      const auto len = static_cast<std::size_t>(rng.uniform(0.10, 0.26) * fs);
      const double f0_start = speaker_f0 * rng.uniform(0.9, 1.15);
      const double f0_end = speaker_f0 * rng.uniform(0.8, 1.05);
      const double amp = rng.uniform(0.6, 1.0);
      for (std::size_t i = 0; i < len && pos < total; ++i, ++pos) {
        const double u = static_cast<double>(i) / static_cast<double>(len);
        if (i % 32 == 0) {
          for (std::size_t f = 0; f < 4; ++f) {
            formants[f] = formant_scale * (from.formants[f] + (to.formants[f] - from.formants[f]) * u);
            tract[f].tune(std::min(formants[f], 0.45 * fs), kBandwidths[f], fs);
          }
        }
        const double f0 = f0_start + (f0_end - f0_start) * u + 3.0 * std::sin(kTwoPi * 5.0 * u);
        phase += f0 / fs;
        double pulse = 0.0;
        if (phase >= 1.0) {
          phase -= 1.0;
          pulse = 1.0 + 0.05 * rng.gaussian();
        }
        glottal_lp = 0.92 * glottal_lp + pulse;
        const double source = glottal_lp + 0.02 * rng.gaussian();
        double voiced = 0.0;
        for (std::size_t f = 0; f < 4; ++f) voiced += kFormantGains[f] * tract[f].process(source);
        const double env = std::pow(std::sin(std::numbers::pi * u), 0.6);
        out[pos] += amp * env * voiced;
      }
    }
    pos += static_cast<std::size_t>(rng.uniform(0.05, 0.3) * fs);
  }

  normalize_rms(out, options.rms_level);
  if (options.noise_fraction > 0.0) {
    const double sigma = options.noise_fraction * options.rms_level;
    for (double& v : out) v += sigma * rng.gaussian();
  }
  for (double& v : out) v = std::clamp(v, -1.0, 1.0);
  return AudioBuffer{std::move(out), options.sample_rate};
}

AudioBuffer sine(double frequency_hz, double seconds, int sample_rate, double amplitude,
                 double phase) {
  const auto n = static_cast<std::size_t>(std::llround(seconds * sample_rate));
  AudioBuffer a{std::vector<double>(n), sample_rate};
  for (std::size_t i = 0; i < n; ++i)
    a.samples[i] = amplitude * std::sin(kTwoPi * frequency_hz * static_cast<double>(i) /
                                            sample_rate + phase);
  return a;
}

AudioBuffer white_noise(std::size_t samples, int sample_rate, double amplitude,
                        std::uint64_t seed) {
  Rng rng(seed);
  AudioBuffer a{std::vector<double>(samples), sample_rate};
  for (double& v : a.samples) v = amplitude * (2.0 * rng.uniform() - 1.0);
  return a;
}

AudioBuffer speech_shaped_noise(std::size_t samples, int sample_rate, double rms_level,
                                std::uint64_t seed) {
  Rng rng(seed);
  std::array<Resonator, 3> shape;
  shape[0].tune(500.0, 300.0, sample_rate);
  shape[1].tune(1500.0, 500.0, sample_rate);
  shape[2].tune(std::min(2500.0, 0.45 * sample_rate), 700.0, sample_rate);
  std::vector<double> out(samples);
  double lp = 0.0;
  for (double& v : out) {
    const double w = rng.gaussian();
    lp = 0.85 * lp + 0.15 * w;
    double acc = 0.3 * lp;
    for (auto& r : shape) acc += r.process(w);
    v = acc;
  }
  normalize_rms(out, rms_level);
  return AudioBuffer{std::move(out), sample_rate};
}

}  // namespace rvqlab::synth
