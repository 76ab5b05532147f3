#include "rvqlab/datapipe.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "random.h"
#include "rvqlab/error.h"
#include "rvqlab/resample.h"
#include "rvqlab/wav.h"

namespace rvqlab::datapipe {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::array<std::string_view, 6> kNames{"HQ1", "HQ2", "HQ3", "MQ1", "MQ2", "UQ"};

[[noreturn]] void schema(std::size_t line, const std::string& what) {
  fail(ErrorCode::kSchemaError, "manifest line " + std::to_string(line) + ": " + what);
}

const json& field(const json& record, const char* name, std::size_t line) {
  const auto it = record.find(name);
  if (it == record.end()) schema(line, std::string("missing field '") + name + "'");
  return *it;
}

}  // namespace

std::string_view category_name(Category c) { return kNames[static_cast<std::size_t>(c)]; }

Category parse_category(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i)
    if (kNames[i] == name) return static_cast<Category>(i);
  fail(ErrorCode::kSchemaError, "unknown category '" + std::string(name) + "'");
}

std::string Manifest::resolve(const ManifestEntry& entry) const {
  const fs::path p(entry.path);
  if (p.is_absolute() || base_dir.empty()) return p.string();
  return (fs::path(base_dir) / p).string();
}

std::map<Category, CategorySummary> Manifest::summary() const {
  std::map<Category, CategorySummary> out;
  for (auto c : kAllCategories) out[c] = {};
  for (const auto& e : entries) {
    auto& s = out[e.category];
    ++s.files;
    s.hours += e.duration / 3600.0;
  }
  return out;
}

double Manifest::total_hours() const {
  double h = 0.0;
  for (const auto& e : entries) h += e.duration / 3600.0;
  return h;
}

Manifest parse_manifest(std::string_view text, const std::string& base_dir, bool check_files) {
  Manifest m;
  m.base_dir = base_dir;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      schema(number, std::string("invalid JSON: ") + e.what());
    }
    if (!record.is_object()) schema(number, "record is not an object");
    ManifestEntry entry;
    const auto& path = field(record, "path", number);
    const auto& category = field(record, "category", number);
    const auto& duration = field(record, "duration", number);
    const auto& rate = field(record, "sample_rate", number);
    if (!path.is_string() || path.get_ref<const std::string&>().empty())
      schema(number, "'path' must be a nonempty string");
    if (!category.is_string()) schema(number, "'category' must be a string");
    if (!duration.is_number()) schema(number, "'duration' must be a number");
    if (!rate.is_number_integer()) schema(number, "'sample_rate' must be an integer");
    entry.path = path.get<std::string>();
    try {
      entry.category = parse_category(category.get<std::string>());
    } catch (const Error& e) {
      schema(number, e.detail());
    }
    entry.duration = duration.get<double>();
    if (!(entry.duration > 0) || !std::isfinite(entry.duration))
      schema(number, "'duration' must be positive");
    const auto r = rate.get<long long>();
    if (r <= 0 || r > 1'000'000) schema(number, "'sample_rate' must be positive");
    entry.sample_rate = static_cast<int>(r);
    if (check_files && !fs::exists(m.resolve(entry)))
      fail(ErrorCode::kMissingFile, m.resolve(entry));
    m.entries.push_back(std::move(entry));
  }
  return m;
}

Manifest load_manifest(const std::string& path) {
  if (!fs::exists(path)) fail(ErrorCode::kMissingFile, path);
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str(), fs::path(path).parent_path().string());
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path);
  for (const auto& e : entries) {
    json record{{"path", e.path},
                {"category", std::string(category_name(e.category))},
                {"duration", e.duration},
                {"sample_rate", e.sample_rate}};
    out << record.dump() << '\n';
  }
  if (!out) fail(ErrorCode::kIoError, "short write to " + path);
}

std::vector<PlannedExcerpt> plan_batch(const Manifest& manifest, const BatchSpec& spec,
                                       std::uint64_t batch_index) {
  if (spec.excerpt_samples == 0 || spec.excerpt_samples % kHop != 0)
    fail(ErrorCode::kInvalidConfig, "excerpt length must be a positive multiple of 320, got " +
                                        std::to_string(spec.excerpt_samples));
  std::vector<Category> cats = spec.categories;
  if (cats.empty()) cats.assign(kAllCategories.begin(), kAllCategories.end());
  if (spec.batch_size == 0 || spec.batch_size % cats.size() != 0)
    fail(ErrorCode::kNotDivisible, "batch size " + std::to_string(spec.batch_size) +
                                       " is not a multiple of " + std::to_string(cats.size()) +
                                       " categories");

  // Cumulative durations per category, in manifest order.
  std::vector<std::vector<std::size_t>> members(cats.size());
  std::vector<std::vector<double>> cumulative(cats.size());
  for (std::size_t i = 0; i < manifest.entries.size(); ++i)
    for (std::size_t c = 0; c < cats.size(); ++c)
      if (manifest.entries[i].category == cats[c]) {
        members[c].push_back(i);
        const double prev = cumulative[c].empty() ? 0.0 : cumulative[c].back();
        cumulative[c].push_back(prev + manifest.entries[i].duration);
      }
  for (std::size_t c = 0; c < cats.size(); ++c)
    if (members[c].empty())
      fail(ErrorCode::kEmptyCategory, std::string(category_name(cats[c])));

  detail::Rng rng(detail::mix_seed(spec.seed, batch_index));
  std::vector<PlannedExcerpt> plan(spec.batch_size);
  for (std::size_t slot = 0; slot < spec.batch_size; ++slot) {
    const auto c = slot % cats.size();
    const double target = rng.uniform() * cumulative[c].back();
    const auto it = std::upper_bound(cumulative[c].begin(), cumulative[c].end(), target);
    const auto pick = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative[c].begin()),
                                            members[c].size() - 1);
    plan[slot] = {members[c][pick], cats[c], rng.next()};
  }
  return plan;
}

std::size_t excerpt_offset(std::size_t source_length, std::size_t length, std::uint64_t seed) {
  if (source_length <= length) return 0;
  detail::Rng rng(seed);
  return static_cast<std::size_t>(rng.index(source_length - length + 1));
}

AudioBuffer extract_excerpt(const AudioBuffer& audio, std::size_t length, std::uint64_t seed) {
  if (audio.size() == length) return audio;
  if (audio.empty()) return AudioBuffer{std::vector<double>(length, 0.0), audio.sample_rate};
  if (audio.size() < length)
    return AudioBuffer{reflect_pad(audio.samples, 0, length - audio.size()), audio.sample_rate};
  const auto start = excerpt_offset(audio.size(), length, seed);
  return AudioBuffer{std::vector<double>(audio.samples.begin() + static_cast<long>(start),
                                         audio.samples.begin() + static_cast<long>(start + length)),
                     audio.sample_rate};
}

std::vector<Excerpt> sample_batch(const Manifest& manifest, const BatchSpec& spec,
                                  std::uint64_t batch_index, const AudioLoader& loader) {
  const auto plan = plan_batch(manifest, spec, batch_index);
  std::vector<Excerpt> out;
  out.reserve(plan.size());
  for (const auto& p : plan) {
    const auto& entry = manifest.entries[p.entry];
    const auto path = manifest.resolve(entry);
    AudioBuffer audio = loader ? loader(path) : read_wav(path);
    if (audio.sample_rate != kTargetRate) audio = dsp::resample(audio, kTargetRate);
    Excerpt e;
    e.plan = p;
    e.source = path;
    e.padded = audio.size() < spec.excerpt_samples;
    e.offset = excerpt_offset(audio.size(), spec.excerpt_samples, p.excerpt_seed);
    e.audio = extract_excerpt(audio, spec.excerpt_samples, p.excerpt_seed);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace rvqlab::datapipe
