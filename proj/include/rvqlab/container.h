#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rvqlab/frontend.h"
#include "rvqlab/rvq.h"

namespace rvqlab::codec {

inline constexpr std::uint16_t kModelVersion = 1;

// Binary layout: "RVQM", u16 version, then three sections in order, each a
// 4-byte tag followed by a u64 byte length: "FRNT" (front-end), "RVQ " (rvq)
// and "META" (sorted UTF-8 key/value pairs). Little-endian, float64 weights.
struct ModelContainer {
  FrontendModel frontend;
  rvq::RvqModel rvq;
  std::map<std::string, std::string> metadata;

  friend bool operator==(const ModelContainer&, const ModelContainer&) = default;
};

std::vector<std::uint8_t> serialize(const ModelContainer& model);
// Throws CorruptModel on bad magic, version, truncation or inconsistent sections.
ModelContainer deserialize(std::span<const std::uint8_t> bytes);

void save(const ModelContainer& model, const std::string& path);
ModelContainer load(const std::string& path);

// 64-bit FNV-1a, used for the training corpus fingerprint.
class Fnv1a {
 public:
  void update(std::span<const std::uint8_t> bytes);
  void update(std::string_view text);
  std::uint64_t value() const noexcept { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ull;
};

}  // namespace rvqlab::codec
