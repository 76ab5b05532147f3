#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rvqlab/latent.h"
#include "rvqlab/matrix.h"

namespace rvqlab::rvq {

inline constexpr std::size_t kMaxStages = 32;

struct RvqConfig {
  std::size_t stages = 8;            // Q, 1..32
  std::size_t codebook_size = 1024;  // K, power of two
  std::size_t code_dim = 8;
  std::size_t latent_dim = 64;  // D
  int frame_rate = 75;
  std::uint64_t seed = 0;
  int max_iterations = 100;
  double tolerance = 1e-6;
  // Training frames beyond this are dropped by a seeded subsample; 0 keeps all.
  std::size_t max_training_frames = 0;

  friend bool operator==(const RvqConfig&, const RvqConfig&) = default;
};

// InvalidConfig on any out-of-range field.
void validate(const RvqConfig& config);
int bits_per_code(std::size_t codebook_size);

// One stage. Lookup happens in a code_dim space: the residual is projected by
// in_proj, L2-normalized and matched against unit-norm entries. The matched
// entry is scaled by its gain and mapped back by out_proj.
struct Codebook {
  Matrix entries;   // K x code_dim, unit rows
  Vector gains;     // K
  Matrix in_proj;   // code_dim x D, orthonormal rows
  Matrix out_proj;  // D x code_dim, in_proj transposed

  std::size_t size() const noexcept { return static_cast<std::size_t>(entries.rows()); }
  std::size_t code_dim() const noexcept { return static_cast<std::size_t>(entries.cols()); }
  std::size_t latent_dim() const noexcept { return static_cast<std::size_t>(in_proj.cols()); }

  friend bool operator==(const Codebook&, const Codebook&) = default;
};

struct RvqModel {
  RvqConfig config;
  std::vector<Codebook> stages;
  std::vector<double> training_mse;  // mean squared residual norm after each stage

  friend bool operator==(const RvqModel&, const RvqModel&) = default;
};

// Codes are stored frame-major: codes[t * stages + s].
struct TokenStream {
  std::size_t frames = 0;
  std::size_t stages = 0;
  std::uint32_t codebook_size = 0;
  int frame_rate = 75;
  std::vector<std::uint16_t> codes;

  std::uint16_t at(std::size_t t, std::size_t s) const { return codes[t * stages + s]; }
  // First q stages of every frame.
  TokenStream prefix(std::size_t q) const;

  friend bool operator==(const TokenStream&, const TokenStream&) = default;
};

struct KMeansResult {
  Matrix centroids;                      // k x dim, unit rows
  std::vector<std::uint32_t> assignment;
  std::vector<double> distortion;        // mean squared distance, one per iteration
};

// k-means on rows that are unit length or exactly zero, with centroids kept
// on the unit sphere. k-means++ seeding, Lloyd refinement, empty clusters
// re-seeded at the farthest points.
KMeansResult spherical_kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                              int max_iterations = 100, double tolerance = 1e-6);

struct TrainingLog {
  std::vector<std::vector<double>> lloyd_distortion;  // per stage
};

// Rows of `latents` are training frames.
RvqModel train_rvq(const Matrix& latents, const RvqConfig& config, TrainingLog* log = nullptr);
RvqModel train_rvq(std::span<const LatentSequence> pool, const RvqConfig& config,
                   TrainingLog* log = nullptr);

// Validates shapes, unit norms and finiteness; throws CorruptModel.
void check_model(const RvqModel& model);

// Single-stage primitives used by quantize and training.
void project(const Codebook& stage, std::span<const double> residual, std::span<double> code);
std::uint32_t nearest_entry(const Codebook& stage, std::span<const double> direction);
// Encodes one stage: returns the chosen index and subtracts its contribution.
std::uint32_t quantize_stage(const Codebook& stage, std::span<double> residual);
void add_entry(const Codebook& stage, std::uint32_t index, std::span<double> accum,
               double sign = 1.0);

TokenStream quantize(const RvqModel& model, const LatentSequence& latents, std::size_t q);
LatentSequence dequantize(const RvqModel& model, const TokenStream& tokens, std::size_t q);

// Mean squared residual norm after each of the Q stages.
std::vector<double> stage_distortions(const RvqModel& model, const LatentSequence& latents);

double bitrate(const RvqConfig& config, std::size_t q);
double token_rate(const RvqConfig& config, std::size_t q);

}  // namespace rvqlab::rvq
