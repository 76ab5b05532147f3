#include "rvqlab/training.h"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>

#include "parallel.h"
#include "rvqlab/error.h"
#include "rvqlab/frontend.h"

namespace rvqlab::training {
namespace {

std::string join(const std::vector<double>& v) {
  std::string out;
  char buf[32];
  for (double x : v) {
    std::snprintf(buf, sizeof buf, "%.9g", x);
    out += (out.empty() ? "" : ",") + std::string(buf);
  }
  return out;
}

}  // namespace

std::size_t auto_batch_count(const datapipe::Manifest& manifest, const TrainOptions& options) {
  double seconds = 0.0;
  for (const auto& e : manifest.entries) seconds += e.duration;
  const double frames_per_batch =
      static_cast<double>(options.batch_size * (datapipe::kExcerptSamples / datapipe::kHop));
  const double wanted = std::max(seconds * codec::kFrameRate,
                                 20.0 * static_cast<double>(options.rvq.codebook_size));
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(wanted / frames_per_batch)));
}

TrainResult train_codec(const datapipe::Manifest& manifest, const TrainOptions& options,
                        const datapipe::AudioLoader& loader) {
  auto rvq_config = options.rvq;
  rvq_config.latent_dim = options.latent_dim;
  rvq_config.seed = options.seed;
  rvq::validate(rvq_config);

  TrainResult result;
  result.batches = options.batches ? options.batches : auto_batch_count(manifest, options);
  datapipe::BatchSpec spec;
  spec.batch_size = options.batch_size;
  spec.seed = options.seed;

  // Only log-mel frames are kept; they are a quarter the size of the audio.
  struct Slot {
    Matrix log_mel;
    datapipe::Category category;
    std::uint64_t hash;
  };
  codec::FrontendFitter fitter;
  std::vector<std::vector<Slot>> batches(result.batches);
  detail::parallel_for(result.batches, options.threads, [&](std::size_t b) {
    for (auto& ex : datapipe::sample_batch(manifest, spec, b, loader)) {
      codec::Fnv1a h;
      h.update(std::span(reinterpret_cast<const std::uint8_t*>(ex.audio.samples.data()),
                         ex.audio.samples.size() * sizeof(double)));
      batches[b].push_back({fitter.analyze(ex.audio), ex.plan.category, h.value()});
    }
  });

  for (auto c : datapipe::kAllCategories) result.excerpts[c] = 0;
  codec::Fnv1a corpus;
  for (const auto& batch : batches)
    for (const auto& slot : batch) {
      fitter.add_log_mel(slot.log_mel);
      ++result.excerpts[slot.category];
      corpus.update(std::span(reinterpret_cast<const std::uint8_t*>(&slot.hash), sizeof slot.hash));
    }
  result.frames = fitter.frames();

  auto& model = result.model;
  model.frontend = fitter.fit(options.latent_dim);
  std::vector<LatentSequence> pool;
  for (auto& batch : batches) {
    for (const auto& slot : batch) pool.push_back(codec::encode_log_mel(model.frontend, slot.log_mel));
    batch.clear();
  }
  model.rvq = rvq::train_rvq(pool, rvq_config, &result.log);

  model.metadata = codec::frontend_metadata(model.frontend);
  model.metadata["corpus.fnv1a"] = corpus.hex();
  model.metadata["corpus.files"] = std::to_string(manifest.entries.size());
  std::string balance;
  for (const auto& [c, n] : result.excerpts)
    balance += (balance.empty() ? "" : ",") + std::string(datapipe::category_name(c)) + ":" +
               std::to_string(n);
  model.metadata["training.excerpts_per_category"] = balance;
  model.metadata["training.batches"] = std::to_string(result.batches);
  model.metadata["training.batch_size"] = std::to_string(options.batch_size);
  model.metadata["training.frames"] = std::to_string(result.frames);
  model.metadata["training.stage_mse"] = join(model.rvq.training_mse);
  model.metadata["seed"] = std::to_string(options.seed);
  if (options.creation_time) model.metadata["created"] = *options.creation_time;
  return result;
}

std::optional<std::string> source_date_epoch() {
  const char* env = std::getenv("SOURCE_DATE_EPOCH");
  if (!env || !*env) return std::nullopt;
  char* end = nullptr;
  const long long seconds = std::strtoll(env, &end, 10);
  if (*end != '\0' || seconds < 0) return std::nullopt;
  const std::time_t t = static_cast<std::time_t>(seconds);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace rvqlab::training
