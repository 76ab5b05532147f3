#pragma once

#include <cstdint>
#include <vector>

#include "rvqlab/audio.h"
#include "rvqlab/stft.h"

namespace rvqlab::dsp {

struct GriffinLimOptions {
  int iterations = 32;
  // Zero initial phase unless random_initial_phase is set; the seed only
  // matters in that mode.
  bool random_initial_phase = false;
  std::uint64_t seed = 0;
};

struct GriffinLimResult {
  AudioBuffer audio;
  // Spectral convergence after each iteration, measured on the two-sided
  // spectrum of the padded-domain estimate. Nonincreasing.
  std::vector<double> spectral_convergence;
};

// Each iteration is a least-squares overlap-add resynthesis followed by a
// magnitude projection. Any hop <= fft_size works, COLA or not.

// ||X| - M|_F / ||M||_F over the two-sided spectrum (interior bins count twice).
double spectral_convergence(const ComplexMatrix& estimate, const Matrix& target);

GriffinLimResult griffin_lim(const MagnitudeSpectrogram& target,
                             const GriffinLimOptions& options = {});

}  // namespace rvqlab::dsp
