#include "rvqlab/frontend.h"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "rvqlab/error.h"
#include "rvqlab/griffin_lim.h"

namespace rvqlab::codec {
namespace {

std::string format_list(const std::vector<double>& values) {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.9g", values[i]);
    if (i) out += ',';
    out += buf;
  }
  return out;
}

// Flip each row so its largest-magnitude entry is positive.
void canonicalize_signs(Matrix& rows) {
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    Eigen::Index arg = 0;
    rows.row(r).cwiseAbs().maxCoeff(&arg);
    if (rows(r, arg) < 0) rows.row(r) *= -1.0;
  }
}

}  // namespace

void validate(const FrontendSettings& s) {
  dsp::validate(s.stft);
  if (s.sample_rate <= 0 || static_cast<long long>(s.stft.hop) * kFrameRate != s.sample_rate)
    fail(ErrorCode::kInvalidConfig, "hop * 75 must equal the sample rate");
  if (!(s.log_floor > 0) || !std::isfinite(s.log_floor))
    fail(ErrorCode::kInvalidConfig, "log floor must be positive");
  (void)dsp::mel_filterbank(s.sample_rate, s.stft.fft_size, s.n_mels, s.f_min, s.f_max);
}

dsp::MelFilterbank FrontendModel::filterbank() const {
  return dsp::mel_filterbank(settings.sample_rate, settings.stft.fft_size, settings.n_mels,
                             settings.f_min, settings.f_max);
}

std::size_t FrontendModel::frame_count(std::size_t samples) const {
  const auto hop = settings.stft.hop;
  return (samples + hop - 1) / hop;
}

namespace {

Matrix analyze_with(const FrontendSettings& s, const dsp::MelFilterbank& fb,
                    const AudioBuffer& audio) {
  if (audio.sample_rate != s.sample_rate)
    fail(ErrorCode::kSampleRateMismatch, "front-end expects " + std::to_string(s.sample_rate) +
                                              " Hz, got " + std::to_string(audio.sample_rate));
  validate(audio);
  if (audio.empty()) fail(ErrorCode::kEmptyInput, "cannot analyze empty audio");
  const auto hop = s.stft.hop;
  const std::size_t frames = (audio.size() + hop - 1) / hop;
  AudioBuffer padded{reflect_pad(audio.samples, 0, frames * hop - audio.size()),
                     audio.sample_rate};
  auto mag = dsp::stft_magnitude(padded, s.stft);
  Matrix kept = mag.magnitudes.topRows(static_cast<Eigen::Index>(frames));
  return dsp::log_mel(kept, fb, s.log_floor);
}

}  // namespace

Matrix FrontendModel::analyze(const AudioBuffer& audio) const {
  return analyze_with(settings, filterbank(), audio);
}

std::vector<double> FrontendModel::explained_variance() const {
  const double total = eigenvalues.sum();
  std::vector<double> out(latent_dim());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = total > 0 ? eigenvalues[static_cast<Eigen::Index>(i)] / total : 0.0;
  return out;
}

FrontendFitter::FrontendFitter(FrontendSettings settings) : settings_(settings) {
  validate(settings_);
  filterbank_ = dsp::mel_filterbank(settings_.sample_rate, settings_.stft.fft_size,
                                    settings_.n_mels, settings_.f_min, settings_.f_max);
  const auto m = static_cast<Eigen::Index>(settings_.n_mels);
  sum_ = Vector::Zero(m);
  scatter_ = Matrix::Zero(m, m);
}

void FrontendFitter::add(const AudioBuffer& audio) {
  add_log_mel(analyze_with(settings_, filterbank_, audio));
}

Matrix FrontendFitter::analyze(const AudioBuffer& audio) const {
  return analyze_with(settings_, filterbank_, audio);
}

void FrontendFitter::add_log_mel(const Matrix& frames) {
  if (frames.cols() != sum_.size())
    fail(ErrorCode::kInvalidInput, "log-mel width does not match the filterbank");
  if (!frames.allFinite()) fail(ErrorCode::kInvalidInput, "non-finite log-mel frame");
  sum_ += frames.colwise().sum().transpose();
  scatter_.noalias() += frames.transpose() * frames;
  count_ += static_cast<std::size_t>(frames.rows());
}

FrontendModel FrontendFitter::fit(std::size_t latent_dim) const {
  if (latent_dim == 0) fail(ErrorCode::kInvalidConfig, "latent dimension must be positive");
  if (latent_dim > settings_.n_mels)
    fail(ErrorCode::kInsufficientData, "latent dimension " + std::to_string(latent_dim) +
                                           " exceeds " + std::to_string(settings_.n_mels) +
                                           " mel bands");
  if (count_ < 10 * latent_dim)
    fail(ErrorCode::kInsufficientData, "need at least " + std::to_string(10 * latent_dim) +
                                           " frames, got " + std::to_string(count_));
  const double n = static_cast<double>(count_);
  FrontendModel model;
  model.settings = settings_;
  model.training_frames = count_;
  model.mean = sum_ / n;
  Matrix cov = scatter_ / n - model.mean * model.mean.transpose();
  cov = 0.5 * (cov + cov.transpose());

  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
  if (solver.info() != Eigen::Success)
    fail(ErrorCode::kInvalidInput, "eigendecomposition failed");
  const auto m = cov.rows();
  model.eigenvalues.resize(m);
  Matrix rows(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    model.eigenvalues[i] = std::max(0.0, solver.eigenvalues()[m - 1 - i]);
    rows.row(i) = solver.eigenvectors().col(m - 1 - i).transpose();
  }
  canonicalize_signs(rows);
  model.basis = rows.topRows(static_cast<Eigen::Index>(latent_dim));
  return model;
}

FrontendModel fit_frontend(std::span<const AudioBuffer> training_audio, std::size_t latent_dim,
                           const FrontendSettings& settings) {
  FrontendFitter fitter(settings);
  for (const auto& clip : training_audio) fitter.add(clip);
  return fitter.fit(latent_dim);
}

std::map<std::string, std::string> frontend_metadata(const FrontendModel& model) {
  std::vector<double> eig(model.eigenvalues.data(),
                          model.eigenvalues.data() + model.eigenvalues.size());
  const auto fractions = model.explained_variance();
  double kept = 0;
  for (double f : fractions) kept += f;
  return {
      {"frontend.latent_dim", std::to_string(model.latent_dim())},
      {"frontend.training_frames", std::to_string(model.training_frames)},
      {"frontend.eigenvalues", format_list(eig)},
      {"frontend.explained_variance", format_list(fractions)},
      {"frontend.explained_variance_total", format_list({kept})},
  };
}

LatentSequence encode_latent(const FrontendModel& model, const AudioBuffer& audio) {
  return encode_log_mel(model, model.analyze(audio));
}

LatentSequence encode_log_mel(const FrontendModel& model, const Matrix& logmel) {
  if (logmel.cols() != model.mean.size())
    fail(ErrorCode::kInvalidInput, "log-mel width " + std::to_string(logmel.cols()) +
                                       " does not match the model");
  LatentSequence out;
  out.frame_rate = kFrameRate;
  out.frames = (logmel.rowwise() - model.mean.transpose()) * model.basis.transpose();
  return out;
}

Matrix latent_to_log_mel(const FrontendModel& model, const LatentSequence& latents) {
  if (latents.dim() != model.latent_dim())
    fail(ErrorCode::kInvalidInput, "latent dimension " + std::to_string(latents.dim()) +
                                       " does not match model dimension " +
                                       std::to_string(model.latent_dim()));
  if (latents.frame_count() == 0) fail(ErrorCode::kEmptyInput, "no latent frames");
  if (!latents.frames.allFinite()) fail(ErrorCode::kInvalidInput, "non-finite latent frame");
  Matrix logmel = latents.frames * model.basis;
  logmel.rowwise() += model.mean.transpose();
  return logmel;
}

AudioBuffer decode_latent(const FrontendModel& model, const LatentSequence& latents,
                          int gl_iterations) {
  const Matrix mel = latent_to_log_mel(model, latents).array().exp().matrix();
  const auto fb = model.filterbank();
  const Matrix pinv = fb.weights.completeOrthogonalDecomposition().pseudoInverse();
  dsp::MagnitudeSpectrogram target;
  target.magnitudes = (mel * pinv.transpose()).cwiseMax(0.0);
  target.config = model.settings.stft;
  target.sample_rate = model.settings.sample_rate;
  target.signal_length = latents.frame_count() * model.settings.stft.hop;
  return dsp::griffin_lim(target, {.iterations = gl_iterations}).audio;
}

}  // namespace rvqlab::codec
