#pragma once

#include <cstddef>
#include <cstdint>

#include "rvqlab/audio.h"

// Deterministic synthetic signals for corpora, demos and tests.
namespace rvqlab::synth {

struct SpeechOptions {
  double duration_seconds = 2.0;
  int sample_rate = 24000;
  double rms_level = 0.1;
  // Additive white noise, as a fraction of the speech RMS (0 = clean).
  double noise_fraction = 0.0;
};

// Formant-synthesized babble: glottal pulse trains through time-varying
// resonators, fricative bursts, syllabic envelopes and pauses.
AudioBuffer speech_like(const SpeechOptions& options, std::uint64_t seed);

AudioBuffer sine(double frequency_hz, double seconds, int sample_rate, double amplitude = 0.5,
                 double phase = 0.0);

AudioBuffer white_noise(std::size_t samples, int sample_rate, double amplitude,
                        std::uint64_t seed);

// White noise through a fixed low-pass tilt and formant-like resonances.
AudioBuffer speech_shaped_noise(std::size_t samples, int sample_rate, double rms_level,
                                std::uint64_t seed);

}  // namespace rvqlab::synth
