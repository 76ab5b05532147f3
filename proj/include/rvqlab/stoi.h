#pragma once

#include <cstddef>

#include "rvqlab/audio.h"
#include "rvqlab/matrix.h"
#include "rvqlab/metrics.h"

namespace rvqlab::metrics {

// Short-time objective intelligibility. Both signals are resampled to
// 10 kHz, frames quieter than the loudest reference frame by 40 dB are
// dropped, and the score is the mean correlation of clipped, normalized
// one-third-octave envelopes over 30-frame (384 ms) segments.
//
// InsufficientDuration when fewer than 30 frames remain.
MetricValue stoi(const AudioBuffer& ref, const AudioBuffer& test);

namespace stoi_detail {

inline constexpr int kRate = 10000;
inline constexpr std::size_t kFrame = 256;
inline constexpr std::size_t kHop = 128;
inline constexpr std::size_t kFft = 512;
inline constexpr std::size_t kBands = 15;
inline constexpr double kMinFreq = 150.0;
inline constexpr std::size_t kSegment = 30;
inline constexpr double kBeta = -15.0;
inline constexpr double kDynamicRange = 40.0;

// kBands x (kFft / 2 + 1) 0/1 band matrix.
Matrix third_octave_bands();

// Operates on signals already at 10 kHz and of equal length.
double stoi_at_10k(const std::vector<double>& ref, const std::vector<double>& test);

}  // namespace stoi_detail
}  // namespace rvqlab::metrics
