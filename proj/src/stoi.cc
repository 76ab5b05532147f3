#include "rvqlab/stoi.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "rvqlab/error.h"
#include "rvqlab/fft.h"
#include "rvqlab/resample.h"

namespace rvqlab::metrics {
namespace stoi_detail {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// hanning(N) without the zero endpoints.
std::vector<double> window() {
  std::vector<double> w(kFrame);
  for (std::size_t i = 0; i < kFrame; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i + 1) /
                                static_cast<double>(kFrame + 1));
  return w;
}

std::size_t frame_count(std::size_t length) {
  return length > kFrame ? (length - kFrame + kHop - 1) / kHop : 0;
}

void remove_silent_frames(std::vector<double>& x, std::vector<double>& y) {
  const auto w = window();
  const auto frames = frame_count(x.size());
  std::vector<double> energy(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double s = 0.0;
    for (std::size_t i = 0; i < kFrame; ++i) {
      const double v = w[i] * x[f * kHop + i];
      s += v * v;
    }
    energy[f] = 20.0 * std::log10(std::sqrt(s) + kEps);
  }
  const double peak = frames ? *std::max_element(energy.begin(), energy.end()) : 0.0;
  std::vector<std::size_t> keep;
  for (std::size_t f = 0; f < frames; ++f)
    if (peak - kDynamicRange - energy[f] < 0) keep.push_back(f);

  const std::size_t out_len = keep.empty() ? 0 : (keep.size() - 1) * kHop + kFrame;
  std::vector<double> xs(out_len, 0.0), ys(out_len, 0.0);
  for (std::size_t j = 0; j < keep.size(); ++j)
    for (std::size_t i = 0; i < kFrame; ++i) {
      xs[j * kHop + i] += w[i] * x[keep[j] * kHop + i];
      ys[j * kHop + i] += w[i] * y[keep[j] * kHop + i];
    }
  x = std::move(xs);
  y = std::move(ys);
}

// Third-octave envelopes, kBands x frames.
Matrix band_envelopes(const std::vector<double>& x, const Matrix& bands) {
  const auto w = window();
  const auto frames = frame_count(x.size());
  auto& fft = dsp::real_fft(kFft);
  std::vector<double> buf(kFft, 0.0);
  std::vector<std::complex<double>> spec(kFft / 2 + 1);
  Matrix power(static_cast<Eigen::Index>(kFft / 2 + 1), static_cast<Eigen::Index>(frames));
  for (std::size_t f = 0; f < frames; ++f) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (std::size_t i = 0; i < kFrame; ++i) buf[i] = w[i] * x[f * kHop + i];
    fft.forward(buf, spec);
    for (std::size_t k = 0; k < spec.size(); ++k)
      power(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(f)) = std::norm(spec[k]);
  }
  return (bands * power).cwiseSqrt();
}

}  // namespace

Matrix third_octave_bands() {
  const std::size_t bins = kFft / 2 + 1;
  auto nearest_bin = [&](double hz) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(kRate) * static_cast<double>(k) / kFft;
      const double d = (f - hz) * (f - hz);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    return best;
  };
  Matrix obm = Matrix::Zero(static_cast<Eigen::Index>(kBands), static_cast<Eigen::Index>(bins));
  for (std::size_t b = 0; b < kBands; ++b) {
    const double k = static_cast<double>(b);
    const auto lo = nearest_bin(kMinFreq * std::pow(2.0, (2 * k - 1) / 6));
    const auto hi = nearest_bin(kMinFreq * std::pow(2.0, (2 * k + 1) / 6));
    for (std::size_t j = lo; j < hi; ++j)
      obm(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j)) = 1.0;
  }
  return obm;
}

double stoi_at_10k(const std::vector<double>& ref, const std::vector<double>& test) {
  std::vector<double> x = ref, y = test;
  remove_silent_frames(x, y);
  const auto frames = frame_count(x.size());
  if (frames < kSegment)
    fail(ErrorCode::kInsufficientDuration,
         "need " + std::to_string(kSegment) + " active frames (384 ms), got " +
             std::to_string(frames));
  const Matrix bands = third_octave_bands();
  const Matrix xe = band_envelopes(x, bands);
  const Matrix ye = band_envelopes(y, bands);
  const double clip = std::pow(10.0, -kBeta / 20.0);
  const auto n = static_cast<Eigen::Index>(kSegment);

  double total = 0.0;
  std::size_t segments = 0;
  for (std::size_t m = kSegment; m <= frames; ++m, ++segments) {
    const auto start = static_cast<Eigen::Index>(m - kSegment);
    for (Eigen::Index b = 0; b < static_cast<Eigen::Index>(kBands); ++b) {
      Eigen::RowVectorXd xs = xe.block(b, start, 1, n);
      Eigen::RowVectorXd ys = ye.block(b, start, 1, n);
      const double alpha = xs.norm() / (ys.norm() + kEps);
      Eigen::RowVectorXd yp = (ys * alpha).cwiseMin(xs * (1.0 + clip));
      yp.array() -= yp.mean();
      xs.array() -= xs.mean();
      yp /= yp.norm() + kEps;
      xs /= xs.norm() + kEps;
      total += yp.dot(xs);
    }
  }
  return total / static_cast<double>(segments * kBands);
}

}  // namespace stoi_detail

MetricValue stoi(const AudioBuffer& ref, const AudioBuffer& test) {
  if (ref.sample_rate != test.sample_rate)
    fail(ErrorCode::kSampleRateMismatch, "stoi inputs at different sample rates");
  validate(ref);
  validate(test);
  const auto n = std::min(ref.size(), test.size());
  AudioBuffer a{std::vector<double>(ref.samples.begin(), ref.samples.begin() + n), ref.sample_rate};
  AudioBuffer b{std::vector<double>(test.samples.begin(), test.samples.begin() + n),
                test.sample_rate};
  if (n == 0) fail(ErrorCode::kInsufficientDuration, "stoi of empty audio");
  a = dsp::resample(a, stoi_detail::kRate);
  b = dsp::resample(b, stoi_detail::kRate);
  return {"stoi", stoi_detail::stoi_at_10k(a.samples, b.samples), true};
}

}  // namespace rvqlab::metrics
