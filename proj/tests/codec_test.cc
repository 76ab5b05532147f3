#include <gtest/gtest.h>

#include <Eigen/QR>
#include <cmath>
#include <random>

#include "oracle/linalg.h"
#include "rvqlab/container.h"
#include "rvqlab/frontend.h"
#include "rvqlab/synth.h"
#include "support/expect.h"

namespace rvqlab::codec {
namespace {

using testing_support::error_detail;
using testing_support::error_of;

std::vector<AudioBuffer> speech_clips(int count, double seconds, std::uint64_t seed) {
  std::vector<AudioBuffer> clips;
  for (int i = 0; i < count; ++i)
    clips.push_back(synth::speech_like({.duration_seconds = seconds}, seed + i));
  return clips;
}

Matrix stack_log_mel(const FrontendModel& model, const std::vector<AudioBuffer>& clips) {
  std::vector<Matrix> parts;
  Eigen::Index rows = 0;
  for (const auto& c : clips) {
    parts.push_back(model.analyze(c));
    rows += parts.back().rows();
  }
  Matrix all(rows, parts.front().cols());
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    all.middleRows(at, p.rows()) = p;
    at += p.rows();
  }
  return all;
}

TEST(Frontend, FrameCountsFollowTailPadding) {
  const auto model = fit_frontend(speech_clips(2, 1.0, 1), 8);
  EXPECT_EQ(encode_latent(model, synth::speech_like({.duration_seconds = 1.0}, 9)).frame_count(),
            75u);
  AudioBuffer excerpt{std::vector<double>(9280, 0.01), kSampleRate};
  EXPECT_EQ(encode_latent(model, excerpt).frame_count(), 29u);
  AudioBuffer odd{std::vector<double>(321, 0.01), kSampleRate};
  EXPECT_EQ(encode_latent(model, odd).frame_count(), 2u);
  EXPECT_EQ(model.frame_count(9120), 29u);
}

TEST(Frontend, RejectsWrongSampleRate) {
  const auto model = fit_frontend(speech_clips(2, 1.0, 1), 8);
  AudioBuffer a{std::vector<double>(16000, 0.0), 16000};
  EXPECT_EQ(error_of([&] { encode_latent(model, a); }), ErrorCode::kSampleRateMismatch);
}

TEST(Frontend, SettingsMustGive75Hz) {
  FrontendSettings s;
  s.stft.hop = 256;
  EXPECT_EQ(error_of([&] { validate(s); }), ErrorCode::kInvalidConfig);
}

TEST(Frontend, FullRankReconstructsExactly) {
  const auto clips = speech_clips(11, 1.0, 2);
  const auto model = fit_frontend(clips, 80);
  Matrix basis_gram = model.basis * model.basis.transpose();
  EXPECT_LT((basis_gram - Matrix::Identity(80, 80)).cwiseAbs().maxCoeff(), 1e-12);
  for (const auto& c : clips) {
    const Matrix logmel = model.analyze(c);
    const Matrix recon = latent_to_log_mel(model, encode_latent(model, c));
    EXPECT_LT((recon - logmel).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Frontend, TruncationErrorEqualsDiscardedEigenvalues) {
  const auto clips = speech_clips(12, 1.0, 3);
  const auto model = fit_frontend(clips, 64);
  const Matrix logmel = stack_log_mel(model, clips);

  std::vector<std::vector<double>> rows(static_cast<std::size_t>(logmel.rows()));
  for (Eigen::Index r = 0; r < logmel.rows(); ++r)
    rows[static_cast<std::size_t>(r)].assign(logmel.row(r).data(),
                                             logmel.row(r).data() + logmel.cols());
  const auto eig = oracle::jacobi_eigenvalues(oracle::covariance(rows));
  long double discarded = 0;
  for (std::size_t i = 64; i < eig.size(); ++i) discarded += eig[i];

  double err = 0;
  for (const auto& c : clips) {
    const Matrix diff = latent_to_log_mel(model, encode_latent(model, c)) - model.analyze(c);
    err += diff.squaredNorm();
  }
  err /= static_cast<double>(logmel.rows());
  ASSERT_GT(discarded, 0);
  EXPECT_NEAR(err, static_cast<double>(discarded), 1e-6 * static_cast<double>(discarded));
  for (int i = 0; i < 80; ++i)
    EXPECT_NEAR(model.eigenvalues[i], static_cast<double>(eig[static_cast<std::size_t>(i)]),
                1e-8 * static_cast<double>(eig[0]));
}

TEST(Frontend, NoRandomProjectionBeatsPca) {
  const auto clips = speech_clips(6, 1.0, 4);
  const std::size_t d = 12;
  const auto model = fit_frontend(clips, d);
  Matrix centered = stack_log_mel(model, clips);
  centered.rowwise() -= model.mean.transpose();
  const double pca_err =
      (centered - centered * model.basis.transpose() * model.basis).squaredNorm();
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    Matrix m(80, static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    // Perturbations of the PCA basis as well as fully random subspaces.
    if (trial % 2 == 0) m = model.basis.transpose() + 0.05 * m;
    Eigen::HouseholderQR<Matrix> qr(m);
    Matrix q = qr.householderQ() * Matrix::Identity(80, static_cast<Eigen::Index>(d));
    const double err = (centered - centered * q * q.transpose()).squaredNorm();
    EXPECT_GE(err, pca_err * (1 - 1e-12));
  }
}

TEST(Frontend, FittingIsDeterministic) {
  const auto clips = speech_clips(3, 1.0, 6);
  EXPECT_EQ(fit_frontend(clips, 16), fit_frontend(clips, 16));
}

TEST(Frontend, RequiresEnoughFrames) {
  const auto clips = speech_clips(1, 1.0, 7);  // 75 frames
  EXPECT_EQ(error_of([&] { fit_frontend(clips, 8); }), ErrorCode::kInsufficientData);
  EXPECT_EQ(error_of([&] { fit_frontend(speech_clips(20, 1.0, 7), 81); }),
            ErrorCode::kInsufficientData);
  EXPECT_NO_THROW(fit_frontend(clips, 7));
}

TEST(Frontend, ZeroAudioGivesIdenticalFrames) {
  const auto model = fit_frontend(speech_clips(3, 1.0, 8), 16);
  AudioBuffer silence{std::vector<double>(24000, 0.0), kSampleRate};
  const auto lat = encode_latent(model, silence);
  const Vector floor_row = Vector::Constant(80, std::log(kLogFloor));
  const Vector expected = model.basis * (floor_row - model.mean);
  for (Eigen::Index t = 0; t < lat.frames.rows(); ++t)
    EXPECT_LT((lat.frames.row(t).transpose() - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Frontend, LogMelShiftsByLogGain) {
  const auto model = fit_frontend(speech_clips(3, 1.0, 9), 16);
  const auto x = synth::speech_like({.duration_seconds = 0.5}, 10);
  auto y = x;
  const double gain = 0.37;
  for (auto& s : y.samples) s *= gain;
  const Matrix a = model.analyze(x);
  const Matrix b = model.analyze(y);
  const double floor = std::log(kLogFloor);
  int checked = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (b.data()[i] <= floor + 1e-9) continue;
    EXPECT_NEAR(b.data()[i] - a.data()[i], std::log(gain), 1e-9);
    ++checked;
  }
  EXPECT_GT(checked, a.size() / 2);
}

TEST(Frontend, DecodeLengthIsFramesTimesHop) {
  const auto model = fit_frontend(speech_clips(3, 1.0, 11), 16);
  const auto lat = encode_latent(model, synth::speech_like({.duration_seconds = 1.0}, 12));
  const auto audio = decode_latent(model, lat, 4);
  EXPECT_EQ(audio.size(), 24000u);
  EXPECT_EQ(audio.sample_rate, kSampleRate);

  LatentSequence wrong{Matrix::Zero(5, 15), 75};
  EXPECT_EQ(error_of([&] { decode_latent(model, wrong, 2); }), ErrorCode::kInvalidInput);
}

TEST(Frontend, FloorLatentsDecodeToSilence) {
  const auto model = fit_frontend(speech_clips(11, 1.0, 13), 80);
  const Vector floor_row = Vector::Constant(80, std::log(kLogFloor));
  LatentSequence lat{Matrix(75, 80), 75};
  for (Eigen::Index t = 0; t < 75; ++t) lat.frames.row(t) = model.basis * (floor_row - model.mean);
  const auto audio = decode_latent(model, lat, 8);
  EXPECT_LT(rms(audio.samples), 1e-3);
}

TEST(Frontend, MetadataListsExplainedVariance) {
  const auto model = fit_frontend(speech_clips(2, 1.0, 14), 8);
  const auto meta = frontend_metadata(model);
  ASSERT_TRUE(meta.count("frontend.explained_variance"));
  const auto fractions = model.explained_variance();
  ASSERT_EQ(fractions.size(), 8u);
  for (std::size_t i = 1; i < fractions.size(); ++i) EXPECT_LE(fractions[i], fractions[i - 1]);
}

ModelContainer small_container() {
  const auto clips = speech_clips(4, 1.5, 20);
  ModelContainer m;
  m.frontend = fit_frontend(clips, 16);
  std::vector<LatentSequence> pool;
  for (const auto& c : clips) pool.push_back(encode_latent(m.frontend, c));
  rvq::RvqConfig cfg{.stages = 3, .codebook_size = 16, .code_dim = 4, .latent_dim = 16};
  m.rvq = rvq::train_rvq(pool, cfg);
  m.metadata = frontend_metadata(m.frontend);
  m.metadata["seed"] = "0";
  return m;
}

TEST(Container, RoundTripIsExact) {
  const auto m = small_container();
  const auto bytes = serialize(m);
  const auto back = deserialize(bytes);
  EXPECT_EQ(back, m);
  EXPECT_EQ(serialize(back), bytes);
  const auto probe = synth::speech_like({.duration_seconds = 0.7}, 99);
  const auto a = rvq::quantize(m.rvq, encode_latent(m.frontend, probe), 3);
  const auto b = rvq::quantize(back.rvq, encode_latent(back.frontend, probe), 3);
  EXPECT_EQ(a, b);
}

TEST(Container, SaveAndLoadFile) {
  const auto m = small_container();
  const std::string path = ::testing::TempDir() + "/model.rvqm";
  save(m, path);
  EXPECT_EQ(load(path), m);
  EXPECT_EQ(error_of([&] { load(path + ".missing"); }), ErrorCode::kMissingFile);
}

TEST(Container, TruncationIsCorruptModel) {
  const auto bytes = serialize(small_container());
  for (std::size_t len : {std::size_t{0}, std::size_t{3}, std::size_t{5}, std::size_t{10},
                          std::size_t{40}, bytes.size() / 2, bytes.size() - 1}) {
    std::span<const std::uint8_t> cut(bytes.data(), len);
    EXPECT_EQ(error_of([&] { deserialize(cut); }), ErrorCode::kCorruptModel) << len;
  }
}

TEST(Container, VersionMismatchNamesVersion) {
  auto bytes = serialize(small_container());
  bytes[4] = 7;
  EXPECT_EQ(error_of([&] { deserialize(bytes); }), ErrorCode::kCorruptModel);
  EXPECT_NE(error_detail([&] { deserialize(bytes); }).find("version 7"), std::string::npos);
}

TEST(Container, BadMagicAndTrailingBytes) {
  auto bytes = serialize(small_container());
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_EQ(error_of([&] { deserialize(bad); }), ErrorCode::kCorruptModel);
  bytes.push_back(0);
  EXPECT_EQ(error_of([&] { deserialize(bytes); }), ErrorCode::kCorruptModel);
}

TEST(Fnv1a, KnownVectors) {
  Fnv1a empty;
  EXPECT_EQ(empty.value(), 0xcbf29ce484222325ull);
  Fnv1a a;
  a.update(std::string_view("a"));
  EXPECT_EQ(a.value(), 0xaf63dc4c8601ec8cull);
  Fnv1a foobar;
  foobar.update(std::string_view("foobar"));
  EXPECT_EQ(foobar.hex(), "85944171f73967e8");
}

}  // namespace
}  // namespace rvqlab::codec
