#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "rvqlab/audio.h"

namespace rvqlab::datapipe {

enum class Category { kHQ1, kHQ2, kHQ3, kMQ1, kMQ2, kUQ };

inline constexpr std::array<Category, 6> kAllCategories{
    Category::kHQ1, Category::kHQ2, Category::kHQ3,
    Category::kMQ1, Category::kMQ2, Category::kUQ};

std::string_view category_name(Category c);
// SchemaError for anything but the six names.
Category parse_category(std::string_view name);

struct ManifestEntry {
  std::string path;  // as written in the manifest
  Category category = Category::kHQ1;
  double duration = 0.0;  // seconds
  int sample_rate = 0;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct CategorySummary {
  std::size_t files = 0;
  double hours = 0.0;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::string base_dir;  // relative entry paths resolve against this

  std::string resolve(const ManifestEntry& entry) const;
  // All six categories, including empty ones.
  std::map<Category, CategorySummary> summary() const;
  double total_hours() const;
};

// One JSON object per line:
//   {"path": "a.wav", "category": "HQ1", "duration": 3.2, "sample_rate": 24000}
// Blank lines are ignored. SchemaError on malformed records, MissingFile when
// a referenced audio file does not exist.
Manifest load_manifest(const std::string& path);
Manifest parse_manifest(std::string_view text, const std::string& base_dir,
                        bool check_files = true);
void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);

inline constexpr std::size_t kExcerptSamples = 9280;
inline constexpr int kTargetRate = 24000;
inline constexpr std::size_t kHop = 320;

struct BatchSpec {
  std::size_t batch_size = 72;
  std::size_t excerpt_samples = kExcerptSamples;
  std::uint64_t seed = 0;
  // Empty means all six.
  std::vector<Category> categories;
};

// One slot of a batch before any audio is read.
struct PlannedExcerpt {
  std::size_t entry = 0;  // index into Manifest::entries
  Category category = Category::kHQ1;
  std::uint64_t excerpt_seed = 0;

  friend bool operator==(const PlannedExcerpt&, const PlannedExcerpt&) = default;
};

struct Excerpt {
  AudioBuffer audio;
  PlannedExcerpt plan;
  std::string source;
  std::size_t offset = 0;
  bool padded = false;
};

// Slot i draws from category i mod n. Within a category an entry is chosen
// with probability proportional to its duration. A pure function of
// (manifest, spec, batch_index). NotDivisible when the batch size is not a
// multiple of the category count, EmptyCategory when one has no entries,
// InvalidConfig when the excerpt length is not a positive multiple of 320.
std::vector<PlannedExcerpt> plan_batch(const Manifest& manifest, const BatchSpec& spec,
                                       std::uint64_t batch_index);

using AudioLoader = std::function<AudioBuffer(const std::string& path)>;

// Loads, resamples to 24 kHz and cuts every planned excerpt.
std::vector<Excerpt> sample_batch(const Manifest& manifest, const BatchSpec& spec,
                                  std::uint64_t batch_index, const AudioLoader& loader = {});

// Uniform start in [0, source_length - length]; 0 when the source is not longer.
std::size_t excerpt_offset(std::size_t source_length, std::size_t length, std::uint64_t seed);

// A window of `length` samples at excerpt_offset, tail reflect-padded when
// the source is shorter.
AudioBuffer extract_excerpt(const AudioBuffer& audio, std::size_t length, std::uint64_t seed);

}  // namespace rvqlab::datapipe
