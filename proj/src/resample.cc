#include "rvqlab/resample.h"

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "rvqlab/error.h"

namespace rvqlab::dsp {
namespace {

constexpr double kHalfTaps = 32.0;
constexpr double kKaiserBeta = 8.0;
constexpr double kRolloff = 0.95;
constexpr long long kMaxPhaseTable = 4096;

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = M_PI * x;
  return std::sin(px) / px;
}

class Kernel {
 public:
  Kernel(double cutoff) : cutoff_(cutoff), half_width_(kHalfTaps / cutoff) {
    norm_ = 1.0 / std::cyl_bessel_i(0.0, kKaiserBeta);
  }
  double half_width() const { return half_width_; }
  double operator()(double d) const {
    const double r = d / half_width_;
    if (r <= -1.0 || r >= 1.0) return 0.0;
    const double win = std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - r * r)) * norm_;
    return cutoff_ * sinc(cutoff_ * d) * win;
  }

 private:
  double cutoff_;
  double half_width_;
  double norm_;
};

}  // namespace

AudioBuffer resample(const AudioBuffer& audio, int target_rate) {
  if (target_rate <= 0)
    fail(ErrorCode::kInvalidInput, "target rate must be positive, got " +
                                       std::to_string(target_rate));
  if (audio.sample_rate <= 0) fail(ErrorCode::kInvalidInput, "source rate must be positive");
  if (target_rate == audio.sample_rate) return audio;

  const long long g = std::gcd(static_cast<long long>(audio.sample_rate),
                               static_cast<long long>(target_rate));
  const long long up = target_rate / g;     // L
  const long long down = audio.sample_rate / g;  // M
  const double ratio = static_cast<double>(target_rate) / audio.sample_rate;
  const Kernel kernel(kRolloff * std::min(1.0, ratio));
  const long long reach = static_cast<long long>(std::ceil(kernel.half_width()));
  const long long width = 2 * reach + 1;

  const auto n_in = static_cast<long long>(audio.size());
  const auto n_out = static_cast<std::size_t>(std::llround(static_cast<double>(n_in) * ratio));

  // Output n sits at input position n*M/L = base + p/L with p = n*M mod L.
  const bool tabulate = up <= kMaxPhaseTable;
  std::vector<double> table;
  if (tabulate) {
    table.resize(static_cast<std::size_t>(up * width));
    for (long long p = 0; p < up; ++p) {
      const double frac = static_cast<double>(p) / static_cast<double>(up);
      for (long long j = -reach; j <= reach; ++j)
        table[static_cast<std::size_t>(p * width + j + reach)] =
            kernel(frac - static_cast<double>(j));
    }
  }

  AudioBuffer out;
  out.sample_rate = target_rate;
  out.samples.assign(n_out, 0.0);
  for (std::size_t n = 0; n < n_out; ++n) {
    const long long num = static_cast<long long>(n) * down;
    const long long base = num / up;
    const long long phase = num % up;
    const double frac = static_cast<double>(phase) / static_cast<double>(up);
    double acc = 0.0;
    for (long long j = -reach; j <= reach; ++j) {
      const long long k = base + j;
      if (k < 0 || k >= n_in) continue;
      const double w = tabulate ? table[static_cast<std::size_t>(phase * width + j + reach)]
                                : kernel(frac - static_cast<double>(j));
      acc += audio.samples[static_cast<std::size_t>(k)] * w;
    }
    out.samples[n] = acc;
  }
  return out;
}

}  // namespace rvqlab::dsp
