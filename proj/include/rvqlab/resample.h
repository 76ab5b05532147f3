#pragma once

#include "rvqlab/audio.h"

namespace rvqlab::dsp {

// Band-limited resampling with a Kaiser-windowed sinc (64 taps at the lower
// of the two rates). Output length is round(len * target / source).
AudioBuffer resample(const AudioBuffer& audio, int target_rate);

}  // namespace rvqlab::dsp
