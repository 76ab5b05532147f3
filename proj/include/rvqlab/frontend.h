#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>

#include "rvqlab/audio.h"
#include "rvqlab/latent.h"
#include "rvqlab/matrix.h"
#include "rvqlab/mel.h"
#include "rvqlab/stft.h"

namespace rvqlab::codec {

inline constexpr int kSampleRate = 24000;
inline constexpr int kFrameRate = 75;
inline constexpr std::size_t kFftSize = 1024;
inline constexpr std::size_t kHop = 320;
inline constexpr std::size_t kMels = 80;
inline constexpr double kLogFloor = 1e-5;
inline constexpr std::size_t kDefaultLatentDim = 64;

// Analysis settings shared by the fitter and the fitted model.
struct FrontendSettings {
  int sample_rate = kSampleRate;
  dsp::StftConfig stft{kFftSize, kHop};
  std::size_t n_mels = kMels;
  double f_min = 0.0;
  double f_max = kSampleRate / 2.0;
  double log_floor = kLogFloor;

  friend bool operator==(const FrontendSettings&, const FrontendSettings&) = default;
};

// Throws InvalidConfig unless hop * 75 == sample_rate and the filterbank is
// constructible.
void validate(const FrontendSettings& settings);

// Log-mel analysis followed by a PCA projection to D dimensions.
struct FrontendModel {
  FrontendSettings settings;
  Vector mean;         // n_mels
  Matrix basis;        // D x n_mels, orthonormal rows, descending variance
  Vector eigenvalues;  // n_mels, descending; the first D belong to basis rows
  std::size_t training_frames = 0;

  std::size_t latent_dim() const noexcept { return static_cast<std::size_t>(basis.rows()); }
  dsp::MelFilterbank filterbank() const;

  // ceil(samples / hop): the tail is reflect-padded to a whole hop and the
  // final centered frame is dropped.
  std::size_t frame_count(std::size_t samples) const;

  // Log-mel intermediate, T x n_mels.
  Matrix analyze(const AudioBuffer& audio) const;

  // Fraction of total variance carried by each kept component.
  std::vector<double> explained_variance() const;

  friend bool operator==(const FrontendModel&, const FrontendModel&) = default;
};

// Accumulates first and second moments of log-mel frames.
class FrontendFitter {
 public:
  explicit FrontendFitter(FrontendSettings settings = {});

  void add(const AudioBuffer& audio);
  void add_log_mel(const Matrix& frames);
  // Log-mel frames as FrontendModel::analyze computes them.
  Matrix analyze(const AudioBuffer& audio) const;
  std::size_t frames() const noexcept { return count_; }

  // InsufficientData when frames() < 10 * latent_dim or latent_dim > n_mels.
  FrontendModel fit(std::size_t latent_dim) const;

 private:
  FrontendSettings settings_;
  dsp::MelFilterbank filterbank_;
  Vector sum_;
  Matrix scatter_;
  std::size_t count_ = 0;
};

FrontendModel fit_frontend(std::span<const AudioBuffer> training_audio,
                           std::size_t latent_dim = kDefaultLatentDim,
                           const FrontendSettings& settings = {});

// Metadata entries describing a fitted model ("frontend.*" keys).
std::map<std::string, std::string> frontend_metadata(const FrontendModel& model);

LatentSequence encode_latent(const FrontendModel& model, const AudioBuffer& audio);
// Same projection applied to precomputed analyze() output.
LatentSequence encode_log_mel(const FrontendModel& model, const Matrix& logmel);

// Inverse projection, exp, clamped mel pseudo-inverse and Griffin-Lim.
// Output length is T * hop samples.
Matrix latent_to_log_mel(const FrontendModel& model, const LatentSequence& latents);
AudioBuffer decode_latent(const FrontendModel& model, const LatentSequence& latents,
                          int gl_iterations = 32);

}  // namespace rvqlab::codec
