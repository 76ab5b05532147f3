#include "rvqlab/container.h"

#include <array>
#include <cstdio>
#include <cstring>

#include "binary_io.h"
#include "rvqlab/error.h"

namespace rvqlab::codec {
namespace {

using detail::ByteReader;
using detail::ByteWriter;

constexpr std::array<char, 4> kMagic{'R', 'V', 'Q', 'M'};
constexpr char kFrontendTag[] = "FRNT";
constexpr char kRvqTag[] = "RVQ ";
constexpr char kMetaTag[] = "META";

void put_matrix(ByteWriter& w, const Matrix& m) {
  w.put_doubles({m.data(), static_cast<std::size_t>(m.size())});
}

void put_vector(ByteWriter& w, const Vector& v) {
  w.put_doubles({v.data(), static_cast<std::size_t>(v.size())});
}

void get_into(ByteReader& r, double* data, std::size_t count) {
  if (count > r.remaining() / sizeof(double))
    fail(ErrorCode::kCorruptModel, "truncated weight array: need " + std::to_string(count) +
                                       " values, " + std::to_string(r.remaining()) +
                                       " bytes left");
  r.get_doubles({data, count});
}

Matrix get_matrix(ByteReader& r, std::uint64_t rows, std::uint64_t cols) {
  if (rows != 0 && cols > (r.remaining() / sizeof(double)) / rows)
    fail(ErrorCode::kCorruptModel, "truncated weight matrix");
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  get_into(r, m.data(), static_cast<std::size_t>(m.size()));
  return m;
}

Vector get_vector(ByteReader& r, std::uint64_t n) {
  if (n > r.remaining() / sizeof(double)) fail(ErrorCode::kCorruptModel, "truncated weight vector");
  Vector v(static_cast<Eigen::Index>(n));
  get_into(r, v.data(), static_cast<std::size_t>(n));
  return v;
}

void write_section(ByteWriter& out, const char* tag, ByteWriter& body) {
  out.put_bytes({reinterpret_cast<const std::uint8_t*>(tag), 4});
  out.put(static_cast<std::uint64_t>(body.size()));
  out.put_bytes(body.bytes());
}

ByteReader read_section(ByteReader& in, const char* tag) {
  auto got = in.get_bytes(4);
  if (std::memcmp(got.data(), tag, 4) != 0)
    fail(ErrorCode::kCorruptModel, std::string("expected section '") + tag + "', found '" +
                                       std::string(got.begin(), got.end()) + "'");
  const auto len = in.get<std::uint64_t>();
  if (len > in.remaining())
    fail(ErrorCode::kCorruptModel, std::string("section '") + tag + "' truncated: declares " +
                                       std::to_string(len) + " bytes, " +
                                       std::to_string(in.remaining()) + " available");
  return ByteReader(in.get_bytes(static_cast<std::size_t>(len)), ErrorCode::kCorruptModel);
}

void expect_consumed(const ByteReader& r, const char* tag) {
  if (r.remaining() != 0)
    fail(ErrorCode::kCorruptModel, std::string("section '") + tag + "' has " +
                                       std::to_string(r.remaining()) + " unexpected bytes");
}

void write_frontend(ByteWriter& w, const FrontendModel& m) {
  const auto& s = m.settings;
  w.put(static_cast<std::uint32_t>(s.sample_rate));
  w.put(static_cast<std::uint32_t>(s.stft.fft_size));
  w.put(static_cast<std::uint32_t>(s.stft.hop));
  w.put(static_cast<std::uint32_t>(s.n_mels));
  w.put(s.f_min);
  w.put(s.f_max);
  w.put(s.log_floor);
  w.put(static_cast<std::uint64_t>(m.training_frames));
  w.put(static_cast<std::uint32_t>(m.latent_dim()));
  put_vector(w, m.mean);
  put_matrix(w, m.basis);
  put_vector(w, m.eigenvalues);
}

FrontendModel read_frontend(ByteReader& r) {
  FrontendModel m;
  auto& s = m.settings;
  s.sample_rate = static_cast<int>(r.get<std::uint32_t>());
  s.stft.fft_size = r.get<std::uint32_t>();
  s.stft.hop = r.get<std::uint32_t>();
  s.n_mels = r.get<std::uint32_t>();
  s.f_min = r.get<double>();
  s.f_max = r.get<double>();
  s.log_floor = r.get<double>();
  m.training_frames = static_cast<std::size_t>(r.get<std::uint64_t>());
  const auto d = r.get<std::uint32_t>();
  try {
    validate(s);
  } catch (const Error& e) {
    fail(ErrorCode::kCorruptModel, "front-end settings: " + e.detail());
  }
  if (d == 0 || d > s.n_mels) fail(ErrorCode::kCorruptModel, "invalid latent dimension");
  m.mean = get_vector(r, s.n_mels);
  m.basis = get_matrix(r, d, s.n_mels);
  m.eigenvalues = get_vector(r, s.n_mels);
  if (!m.mean.allFinite() || !m.basis.allFinite() || !m.eigenvalues.allFinite())
    fail(ErrorCode::kCorruptModel, "non-finite front-end weight");
  return m;
}

void write_rvq(ByteWriter& w, const rvq::RvqModel& m) {
  const auto& c = m.config;
  w.put(static_cast<std::uint32_t>(c.stages));
  w.put(static_cast<std::uint32_t>(c.codebook_size));
  w.put(static_cast<std::uint32_t>(c.code_dim));
  w.put(static_cast<std::uint32_t>(c.latent_dim));
  w.put(static_cast<std::int32_t>(c.frame_rate));
  w.put(c.seed);
  w.put(static_cast<std::int32_t>(c.max_iterations));
  w.put(c.tolerance);
  w.put(static_cast<std::uint64_t>(c.max_training_frames));
  for (const auto& st : m.stages) {
    put_matrix(w, st.entries);
    put_vector(w, st.gains);
    put_matrix(w, st.in_proj);
    put_matrix(w, st.out_proj);
  }
  w.put_doubles(m.training_mse);
}

rvq::RvqModel read_rvq(ByteReader& r) {
  rvq::RvqModel m;
  auto& c = m.config;
  c.stages = r.get<std::uint32_t>();
  c.codebook_size = r.get<std::uint32_t>();
  c.code_dim = r.get<std::uint32_t>();
  c.latent_dim = r.get<std::uint32_t>();
  c.frame_rate = r.get<std::int32_t>();
  c.seed = r.get<std::uint64_t>();
  c.max_iterations = r.get<std::int32_t>();
  c.tolerance = r.get<double>();
  c.max_training_frames = static_cast<std::size_t>(r.get<std::uint64_t>());
  try {
    rvq::validate(c);
  } catch (const Error& e) {
    fail(ErrorCode::kCorruptModel, "rvq config: " + e.detail());
  }
  for (std::size_t s = 0; s < c.stages; ++s) {
    rvq::Codebook st;
    st.entries = get_matrix(r, c.codebook_size, c.code_dim);
    st.gains = get_vector(r, c.codebook_size);
    st.in_proj = get_matrix(r, c.code_dim, c.latent_dim);
    st.out_proj = get_matrix(r, c.latent_dim, c.code_dim);
    m.stages.push_back(std::move(st));
  }
  m.training_mse.resize(c.stages);
  get_into(r, m.training_mse.data(), c.stages);
  rvq::check_model(m);
  return m;
}

}  // namespace

std::vector<std::uint8_t> serialize(const ModelContainer& model) {
  ByteWriter out;
  out.put_bytes({reinterpret_cast<const std::uint8_t*>(kMagic.data()), kMagic.size()});
  out.put(kModelVersion);
  ByteWriter frontend, quantizer, meta;
  write_frontend(frontend, model.frontend);
  write_rvq(quantizer, model.rvq);
  meta.put(static_cast<std::uint32_t>(model.metadata.size()));
  for (const auto& [k, v] : model.metadata) {
    meta.put_string(k);
    meta.put_string(v);
  }
  write_section(out, kFrontendTag, frontend);
  write_section(out, kRvqTag, quantizer);
  write_section(out, kMetaTag, meta);
  return std::move(out.bytes());
}

ModelContainer deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes, ErrorCode::kCorruptModel);
  if (bytes.size() < kMagic.size() ||
      std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0)
    fail(ErrorCode::kCorruptModel, "bad magic: not an RVQM model file");
  in.get_bytes(kMagic.size());
  const auto version = in.get<std::uint16_t>();
  if (version != kModelVersion)
    fail(ErrorCode::kCorruptModel, "unsupported model version " + std::to_string(version) +
                                       " (expected " + std::to_string(kModelVersion) + ")");
  ModelContainer model;
  {
    auto r = read_section(in, kFrontendTag);
    model.frontend = read_frontend(r);
    expect_consumed(r, kFrontendTag);
  }
  {
    auto r = read_section(in, kRvqTag);
    model.rvq = read_rvq(r);
    expect_consumed(r, kRvqTag);
  }
  {
    auto r = read_section(in, kMetaTag);
    const auto n = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < n; ++i) {
      auto key = r.get_string();
      model.metadata[std::move(key)] = r.get_string();
    }
    expect_consumed(r, kMetaTag);
  }
  if (in.remaining() != 0)
    fail(ErrorCode::kCorruptModel, std::to_string(in.remaining()) + " trailing bytes");
  if (model.rvq.config.latent_dim != model.frontend.latent_dim())
    fail(ErrorCode::kCorruptModel, "rvq latent dimension does not match the front-end");
  return model;
}

void save(const ModelContainer& model, const std::string& path) {
  detail::write_file(path, serialize(model));
}

ModelContainer load(const std::string& path) { return deserialize(detail::read_file(path)); }

void Fnv1a::update(std::span<const std::uint8_t> bytes) {
  for (auto b : bytes) {
    state_ ^= b;
    state_ *= 0x100000001b3ull;
  }
}

void Fnv1a::update(std::string_view text) {
  update({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

std::string Fnv1a::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state_));
  return buf;
}

}  // namespace rvqlab::codec
