#include "rvqlab/fft.h"

#include <fftw3.h>

#include <map>
#include <mutex>

#include "rvqlab/error.h"

namespace rvqlab::dsp {
namespace {

// The FFTW planner is not reentrant; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct RealFft::Impl {
  double* time = nullptr;
  fftw_complex* freq = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

RealFft::RealFft(std::size_t n) : n_(n), impl_(std::make_unique<Impl>()) {
  if (n < 2 || (n & (n - 1)) != 0)
    fail(ErrorCode::kInvalidConfig, "FFT size must be a power of two >= 2");
  std::lock_guard lock(planner_mutex());
  impl_->time = fftw_alloc_real(n);
  impl_->freq = fftw_alloc_complex(n / 2 + 1);
  const int size = static_cast<int>(n);
  impl_->forward = fftw_plan_dft_r2c_1d(size, impl_->time, impl_->freq, FFTW_ESTIMATE);
  impl_->inverse = fftw_plan_dft_c2r_1d(size, impl_->freq, impl_->time, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(impl_->forward);
  fftw_destroy_plan(impl_->inverse);
  fftw_free(impl_->time);
  fftw_free(impl_->freq);
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) {
  std::copy(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(n_), impl_->time);
  fftw_execute(impl_->forward);
  const auto* f = reinterpret_cast<const std::complex<double>*>(impl_->freq);
  std::copy(f, f + bins(), out.begin());
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
  auto* f = reinterpret_cast<std::complex<double>*>(impl_->freq);
  std::copy(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(bins()), f);
  // A real signal has purely real DC and Nyquist bins.
  f[0].imag(0.0);
  f[n_ / 2].imag(0.0);
  fftw_execute(impl_->inverse);
  const double scale = 1.0 / static_cast<double>(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = impl_->time[i] * scale;
}

RealFft& real_fft(std::size_t n) {
  thread_local std::map<std::size_t, std::unique_ptr<RealFft>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<RealFft>(n);
  return *slot;
}

}  // namespace rvqlab::dsp
