#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "rvqlab/container.h"
#include "rvqlab/datapipe.h"
#include "rvqlab/rvq.h"

namespace rvqlab::training {

struct TrainOptions {
  std::size_t latent_dim = 64;
  // stages, codebook_size, code_dim, iterations, tolerance and frame cap are
  // taken from here; latent_dim and seed are overwritten.
  rvq::RvqConfig rvq;
  std::uint64_t seed = 0;
  std::size_t batch_size = 72;
  // 0 picks enough batches to cover the corpus once and to give at least
  // 20 frames per codebook entry.
  std::size_t batches = 0;
  std::size_t threads = 1;
  // Recorded as metadata "created" when set; nothing time-dependent otherwise.
  std::optional<std::string> creation_time;
};

struct TrainResult {
  codec::ModelContainer model;
  rvq::TrainingLog log;
  std::map<datapipe::Category, std::size_t> excerpts;  // per category, all six
  std::size_t batches = 0;
  std::size_t frames = 0;
};

std::size_t auto_batch_count(const datapipe::Manifest& manifest, const TrainOptions& options);

// Draws balanced batches from the manifest, fits the front end on their
// log-mel frames and trains the RVQ on the resulting latents. The corpus
// hash in the metadata covers the exact excerpt samples used.
TrainResult train_codec(const datapipe::Manifest& manifest, const TrainOptions& options,
                        const datapipe::AudioLoader& loader = {});

// SOURCE_DATE_EPOCH as an ISO-8601 UTC timestamp, if set and numeric.
std::optional<std::string> source_date_epoch();

}  // namespace rvqlab::training
