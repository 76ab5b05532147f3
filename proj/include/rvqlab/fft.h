#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace rvqlab::dsp {

// Real-input FFT of a fixed size backed by FFTW. One instance must not be
// used from two threads at once; use real_fft() for a per-thread instance.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const noexcept { return n_; }
  std::size_t bins() const noexcept { return n_ / 2 + 1; }

  // in: n samples, out: n/2 + 1 bins (unnormalized).
  void forward(std::span<const double> in, std::span<std::complex<double>> out);
  // in: n/2 + 1 bins, out: n samples, scaled by 1/n so inverse(forward(x)) == x.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);

 private:
  struct Impl;
  std::size_t n_;
  std::unique_ptr<Impl> impl_;
};

RealFft& real_fft(std::size_t n);

}  // namespace rvqlab::dsp
