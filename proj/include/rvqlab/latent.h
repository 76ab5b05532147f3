#pragma once

#include <cstddef>

#include "rvqlab/matrix.h"

namespace rvqlab {

// T x D latent frames at a fixed frame rate.
struct LatentSequence {
  Matrix frames;
  int frame_rate = 75;

  std::size_t frame_count() const noexcept { return static_cast<std::size_t>(frames.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(frames.cols()); }
};

}  // namespace rvqlab
