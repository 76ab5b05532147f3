#include "rvqlab/rvq.h"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "random.h"
#include "rvqlab/error.h"

namespace rvqlab::rvq {
namespace {

constexpr Eigen::Index kAssignBlock = 2048;

bool is_power_of_two(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

double squared_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

void normalize(std::span<double> x) {
  const double n = std::sqrt(squared_norm(x));
  if (n > 0)
    for (double& v : x) v /= n;
}

std::span<const double> row_span(const Matrix& m, Eigen::Index r) {
  return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

std::span<double> row_span(Matrix& m, Eigen::Index r) {
  return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

double row_distance(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
  double s = 0.0;
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    const double d = a(i, c) - b(j, c);
    s += d * d;
  }
  return s;
}

double mean_squared_norm(const Matrix& rows) {
  if (rows.rows() == 0) return 0.0;
  double total = 0.0;
  for (Eigen::Index r = 0; r < rows.rows(); ++r) total += squared_norm(row_span(rows, r));
  return total / static_cast<double>(rows.rows());
}

void require_q(const RvqModel& model, std::size_t q) {
  if (q < 1 || q > model.stages.size())
    fail(ErrorCode::kInvalidInput, "q must be in [1, " + std::to_string(model.stages.size()) +
                                       "], got " + std::to_string(q));
}

// Top eigenvectors of the uncentered second moment, code_dim x D.
Matrix fit_projection(const Matrix& residuals, std::size_t code_dim) {
  Matrix moment = residuals.transpose() * residuals;
  moment /= static_cast<double>(std::max<Eigen::Index>(1, residuals.rows()));
  moment = 0.5 * (moment + moment.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(moment);
  if (solver.info() != Eigen::Success)
    fail(ErrorCode::kInvalidInput, "eigendecomposition of residuals failed");
  const auto d = moment.rows();
  Matrix proj(static_cast<Eigen::Index>(code_dim), d);
  for (Eigen::Index i = 0; i < proj.rows(); ++i) {
    proj.row(i) = solver.eigenvectors().col(d - 1 - i).transpose();
    Eigen::Index arg = 0;
    proj.row(i).cwiseAbs().maxCoeff(&arg);
    if (proj(i, arg) < 0) proj.row(i) *= -1.0;
  }
  return proj;
}

struct Assignment {
  std::vector<std::uint32_t> index;
  std::vector<double> distance;
  double mean = 0.0;
};

Assignment assign(const Matrix& points, const Matrix& centroids) {
  const auto n = points.rows();
  const auto k = centroids.rows();
  Assignment out;
  out.index.resize(static_cast<std::size_t>(n));
  out.distance.resize(static_cast<std::size_t>(n));
  const Matrix ct = centroids.transpose();
  Matrix dots;
  double total = 0.0;
  for (Eigen::Index start = 0; start < n; start += kAssignBlock) {
    const auto rows = std::min(kAssignBlock, n - start);
    dots.noalias() = points.middleRows(start, rows) * ct;
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double* s = dots.data() + r * k;
      Eigen::Index best = 0;
      for (Eigen::Index j = 1; j < k; ++j)
        if (s[j] > s[best]) best = j;
      const auto p = static_cast<std::size_t>(start + r);
      const double norm2 = squared_norm(row_span(points, start + r));
      const double cnorm2 = squared_norm(row_span(centroids, best));
      const double d = std::max(0.0, norm2 + cnorm2 - 2.0 * s[best]);
      out.index[p] = static_cast<std::uint32_t>(best);
      out.distance[p] = d;
      total += d;
    }
  }
  out.mean = n > 0 ? total / static_cast<double>(n) : 0.0;
  return out;
}

Matrix seed_centroids(const Matrix& points, const std::vector<Eigen::Index>& candidates,
                      std::size_t k, detail::Rng& rng) {
  const auto dim = points.cols();
  Matrix centroids = Matrix::Zero(static_cast<Eigen::Index>(k), dim);
  if (candidates.empty()) {
    for (Eigen::Index j = 0; j < centroids.rows(); ++j) centroids(j, j % dim) = 1.0;
    return centroids;
  }
  std::vector<double> d2(candidates.size());
  auto place = [&](Eigen::Index j, std::size_t c) {
    centroids.row(j) = points.row(candidates[c]);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const double d = row_distance(points, candidates[i], centroids, j);
      d2[i] = j == 0 ? d : std::min(d2[i], d);
    }
  };
  place(0, rng.index(candidates.size()));
  for (Eigen::Index j = 1; j < centroids.rows(); ++j) {
    double total = 0.0;
    for (double d : d2) total += d;
    std::size_t choice;
    if (total > 0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      choice = candidates.size() - 1;
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        acc += d2[i];
        if (acc > target && d2[i] > 0) {
          choice = i;
          break;
        }
      }
      while (d2[choice] <= 0 && choice > 0) --choice;
    } else {
      choice = rng.index(candidates.size());
    }
    place(j, choice);
  }
  return centroids;
}

}  // namespace

void validate(const RvqConfig& c) {
  if (c.stages < 1 || c.stages > kMaxStages)
    fail(ErrorCode::kInvalidConfig, "stages must be in [1, 32], got " + std::to_string(c.stages));
  if (!is_power_of_two(c.codebook_size) || c.codebook_size > 65536)
    fail(ErrorCode::kInvalidConfig, "codebook size must be a power of two in [2, 65536], got " +
                                        std::to_string(c.codebook_size));
  if (c.latent_dim < 1) fail(ErrorCode::kInvalidConfig, "latent dimension must be positive");
  if (c.code_dim < 1 || c.code_dim > c.latent_dim)
    fail(ErrorCode::kInvalidConfig, "code_dim must be in [1, latent_dim], got " +
                                        std::to_string(c.code_dim));
  if (c.frame_rate <= 0) fail(ErrorCode::kInvalidConfig, "frame rate must be positive");
  if (c.max_iterations < 1) fail(ErrorCode::kInvalidConfig, "max_iterations must be >= 1");
  if (!(c.tolerance >= 0)) fail(ErrorCode::kInvalidConfig, "tolerance must be >= 0");
  if (c.max_training_frames != 0 && c.max_training_frames < 10 * c.codebook_size)
    fail(ErrorCode::kInvalidConfig, "max_training_frames must be 0 or at least 10 * K");
}

int bits_per_code(std::size_t codebook_size) {
  int bits = 0;
  while ((std::size_t{1} << bits) < codebook_size) ++bits;
  return bits;
}

TokenStream TokenStream::prefix(std::size_t q) const {
  if (q < 1 || q > stages)
    fail(ErrorCode::kInvalidInput, "prefix length " + std::to_string(q) + " outside [1, " +
                                       std::to_string(stages) + "]");
  TokenStream out{frames, q, codebook_size, frame_rate, {}};
  out.codes.reserve(frames * q);
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t s = 0; s < q; ++s) out.codes.push_back(at(t, s));
  return out;
}

KMeansResult spherical_kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                              int max_iterations, double tolerance) {
  const auto n = points.rows();
  if (k == 0) fail(ErrorCode::kInvalidConfig, "k must be positive");
  if (static_cast<std::size_t>(n) < k)
    fail(ErrorCode::kInsufficientData, "k-means needs at least k points");
  std::vector<Eigen::Index> candidates;
  for (Eigen::Index i = 0; i < n; ++i)
    if (squared_norm(row_span(points, i)) > 0) candidates.push_back(i);

  detail::Rng rng(seed);
  KMeansResult result;
  result.centroids = seed_centroids(points, candidates, k, rng);
  const auto kk = static_cast<Eigen::Index>(k);
  const auto dim = points.cols();

  for (int it = 0; it < max_iterations; ++it) {
    Assignment a = assign(points, result.centroids);
    result.assignment = std::move(a.index);
    const double prev = result.distortion.empty() ? 0.0 : result.distortion.back();
    result.distortion.push_back(a.mean);
    if (it > 0 && (prev <= 0 || std::abs(prev - a.mean) < tolerance * prev)) break;
    if (a.mean <= 0 || it + 1 == max_iterations) break;

    Matrix sums = Matrix::Zero(kk, dim);
    for (Eigen::Index i = 0; i < n; ++i)
      sums.row(result.assignment[static_cast<std::size_t>(i)]) += points.row(i);
    std::vector<Eigen::Index> empty;
    for (Eigen::Index j = 0; j < kk; ++j) {
      const double norm = std::sqrt(squared_norm(row_span(sums, j)));
      if (norm > 0)
        result.centroids.row(j) = sums.row(j) / norm;
      else
        empty.push_back(j);
    }
    if (!empty.empty()) {
      std::vector<Eigen::Index> order = candidates;
      std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
        return a.distance[static_cast<std::size_t>(x)] > a.distance[static_cast<std::size_t>(y)];
      });
      for (std::size_t e = 0; e < empty.size() && e < order.size(); ++e)
        result.centroids.row(empty[e]) = points.row(order[e]);
    }
  }
  return result;
}

void project(const Codebook& stage, std::span<const double> residual, std::span<double> code) {
  const auto d = stage.in_proj.cols();
  for (Eigen::Index j = 0; j < stage.in_proj.rows(); ++j) {
    const double* p = stage.in_proj.data() + j * d;
    double s = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) s += p[i] * residual[static_cast<std::size_t>(i)];
    code[static_cast<std::size_t>(j)] = s;
  }
}

std::uint32_t nearest_entry(const Codebook& stage, std::span<const double> direction) {
  const auto k = stage.entries.rows();
  const auto d = stage.entries.cols();
  std::uint32_t best = 0;
  double best_dist = 0.0;
  for (Eigen::Index e = 0; e < k; ++e) {
    const double* c = stage.entries.data() + e * d;
    double s = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double diff = direction[static_cast<std::size_t>(j)] - c[j];
      s += diff * diff;
    }
    if (e == 0 || s < best_dist) {
      best_dist = s;
      best = static_cast<std::uint32_t>(e);
    }
  }
  return best;
}

void add_entry(const Codebook& stage, std::uint32_t index, std::span<double> accum,
               double sign) {
  const auto cd = stage.entries.cols();
  double scaled[64];
  std::vector<double> heap;
  double* v = scaled;
  if (cd > 64) {
    heap.resize(static_cast<std::size_t>(cd));
    v = heap.data();
  }
  const double g = stage.gains[index];
  for (Eigen::Index j = 0; j < cd; ++j) v[j] = g * stage.entries(index, j);
  for (Eigen::Index i = 0; i < stage.out_proj.rows(); ++i) {
    const double* p = stage.out_proj.data() + i * cd;
    double s = 0.0;
    for (Eigen::Index j = 0; j < cd; ++j) s += p[j] * v[j];
    accum[static_cast<std::size_t>(i)] += sign * s;
  }
}

namespace {

std::uint32_t choose(const Codebook& stage, std::span<const double> residual,
                     std::vector<double>& code) {
  code.resize(stage.code_dim());
  project(stage, residual, code);
  std::vector<double> dir = code;
  normalize(dir);
  return nearest_entry(stage, dir);
}

}  // namespace

std::uint32_t quantize_stage(const Codebook& stage, std::span<double> residual) {
  std::vector<double> code;
  const auto idx = choose(stage, residual, code);
  add_entry(stage, idx, residual, -1.0);
  return idx;
}

RvqModel train_rvq(const Matrix& latents, const RvqConfig& config, TrainingLog* log) {
  validate(config);
  if (static_cast<std::size_t>(latents.cols()) != config.latent_dim)
    fail(ErrorCode::kInvalidInput, "training frames have dimension " +
                                       std::to_string(latents.cols()) + ", expected " +
                                       std::to_string(config.latent_dim));
  if (!latents.allFinite()) fail(ErrorCode::kInvalidInput, "non-finite training frame");
  const auto k = config.codebook_size;
  if (static_cast<std::size_t>(latents.rows()) < 10 * k)
    fail(ErrorCode::kInsufficientData, "need at least " + std::to_string(10 * k) +
                                           " training frames, got " +
                                           std::to_string(latents.rows()));

  Matrix residual;
  const auto total = static_cast<std::size_t>(latents.rows());
  if (config.max_training_frames != 0 && total > config.max_training_frames) {
    std::vector<Eigen::Index> idx(total);
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    detail::Rng rng(detail::mix_seed(config.seed, 0xF00D));
    for (std::size_t i = 0; i < config.max_training_frames; ++i)
      std::swap(idx[i], idx[i + rng.index(total - i)]);
    idx.resize(config.max_training_frames);
    std::sort(idx.begin(), idx.end());
    residual.resize(static_cast<Eigen::Index>(idx.size()), latents.cols());
    for (std::size_t i = 0; i < idx.size(); ++i)
      residual.row(static_cast<Eigen::Index>(i)) = latents.row(idx[i]);
  } else {
    residual = latents;
  }

  const auto n = residual.rows();
  const auto cd = static_cast<Eigen::Index>(config.code_dim);
  RvqModel model;
  model.config = config;
  if (log) log->lloyd_distortion.clear();

  for (std::size_t s = 0; s < config.stages; ++s) {
    Codebook stage;
    stage.in_proj = fit_projection(residual, config.code_dim);
    stage.out_proj = stage.in_proj.transpose();

    Matrix directions = residual * stage.in_proj.transpose();
    for (Eigen::Index i = 0; i < n; ++i) normalize(row_span(directions, i));
    auto km = spherical_kmeans(directions, k, detail::mix_seed(config.seed, s),
                               config.max_iterations, config.tolerance);
    if (log) log->lloyd_distortion.push_back(km.distortion);
    stage.entries = std::move(km.centroids);
    for (Eigen::Index e = 0; e < stage.entries.rows(); ++e) normalize(row_span(stage.entries, e));
    stage.gains = Vector::Zero(static_cast<Eigen::Index>(k));

    // Final assignment goes through the same per-frame path as quantize.
    std::vector<std::uint32_t> chosen(static_cast<std::size_t>(n));
    std::vector<double> gain_sum(k, 0.0);
    std::vector<std::size_t> count(k, 0);
    std::vector<double> code;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto idx = choose(stage, row_span(residual, i), code);
      chosen[static_cast<std::size_t>(i)] = idx;
      double dot = 0.0;
      for (Eigen::Index j = 0; j < cd; ++j) dot += code[static_cast<std::size_t>(j)] * stage.entries(idx, j);
      gain_sum[idx] += dot;
      ++count[idx];
    }
    for (std::size_t e = 0; e < k; ++e)
      if (count[e] > 0) stage.gains[static_cast<Eigen::Index>(e)] = gain_sum[e] / count[e];
    for (Eigen::Index i = 0; i < n; ++i)
      add_entry(stage, chosen[static_cast<std::size_t>(i)], row_span(residual, i), -1.0);

    model.training_mse.push_back(mean_squared_norm(residual));
    model.stages.push_back(std::move(stage));
  }
  return model;
}

RvqModel train_rvq(std::span<const LatentSequence> pool, const RvqConfig& config,
                   TrainingLog* log) {
  Eigen::Index rows = 0;
  for (const auto& seq : pool) {
    if (seq.dim() != config.latent_dim)
      fail(ErrorCode::kInvalidInput, "latent pool entry has dimension " +
                                         std::to_string(seq.dim()) + ", expected " +
                                         std::to_string(config.latent_dim));
    rows += seq.frames.rows();
  }
  Matrix all(rows, static_cast<Eigen::Index>(config.latent_dim));
  Eigen::Index at = 0;
  for (const auto& seq : pool) {
    all.middleRows(at, seq.frames.rows()) = seq.frames;
    at += seq.frames.rows();
  }
  return train_rvq(all, config, log);
}

void check_model(const RvqModel& model) {
  try {
    validate(model.config);
  } catch (const Error& e) {
    fail(ErrorCode::kCorruptModel, std::string("rvq config: ") + e.detail());
  }
  const auto& c = model.config;
  if (model.stages.size() != c.stages || model.training_mse.size() != c.stages)
    fail(ErrorCode::kCorruptModel, "stage count does not match config");
  const auto k = static_cast<Eigen::Index>(c.codebook_size);
  const auto cd = static_cast<Eigen::Index>(c.code_dim);
  const auto d = static_cast<Eigen::Index>(c.latent_dim);
  for (std::size_t s = 0; s < model.stages.size(); ++s) {
    const auto& st = model.stages[s];
    const std::string where = "stage " + std::to_string(s) + ": ";
    if (st.entries.rows() != k || st.entries.cols() != cd || st.gains.size() != k ||
        st.in_proj.rows() != cd || st.in_proj.cols() != d || st.out_proj.rows() != d ||
        st.out_proj.cols() != cd)
      fail(ErrorCode::kCorruptModel, where + "shape mismatch");
    if (!st.entries.allFinite() || !st.gains.allFinite() || !st.in_proj.allFinite() ||
        !st.out_proj.allFinite())
      fail(ErrorCode::kCorruptModel, where + "non-finite weight");
    for (Eigen::Index e = 0; e < k; ++e)
      if (std::abs(st.entries.row(e).norm() - 1.0) > 1e-9)
        fail(ErrorCode::kCorruptModel, where + "entry " + std::to_string(e) + " is not unit norm");
  }
}

TokenStream quantize(const RvqModel& model, const LatentSequence& latents, std::size_t q) {
  require_q(model, q);
  if (latents.dim() != model.config.latent_dim)
    fail(ErrorCode::kInvalidInput, "latent dimension " + std::to_string(latents.dim()) +
                                       " does not match " +
                                       std::to_string(model.config.latent_dim));
  if (!latents.frames.allFinite()) fail(ErrorCode::kInvalidInput, "non-finite latent frame");
  TokenStream out;
  out.frames = latents.frame_count();
  out.stages = q;
  out.codebook_size = static_cast<std::uint32_t>(model.config.codebook_size);
  out.frame_rate = model.config.frame_rate;
  out.codes.resize(out.frames * q);
  std::vector<double> r(model.config.latent_dim);
  for (std::size_t t = 0; t < out.frames; ++t) {
    const auto src = row_span(latents.frames, static_cast<Eigen::Index>(t));
    std::copy(src.begin(), src.end(), r.begin());
    for (std::size_t s = 0; s < q; ++s)
      out.codes[t * q + s] = static_cast<std::uint16_t>(quantize_stage(model.stages[s], r));
  }
  return out;
}

LatentSequence dequantize(const RvqModel& model, const TokenStream& tokens, std::size_t q) {
  if (q < 1 || q > tokens.stages)
    fail(ErrorCode::kInvalidInput, "q must be in [1, " + std::to_string(tokens.stages) +
                                       "], got " + std::to_string(q));
  require_q(model, q);
  if (tokens.codes.size() != tokens.frames * tokens.stages)
    fail(ErrorCode::kCorruptTokens, "token count does not match frames * stages");
  const auto k = model.config.codebook_size;
  LatentSequence out;
  out.frame_rate = model.config.frame_rate;
  out.frames = Matrix::Zero(static_cast<Eigen::Index>(tokens.frames),
                            static_cast<Eigen::Index>(model.config.latent_dim));
  for (std::size_t t = 0; t < tokens.frames; ++t) {
    auto row = row_span(out.frames, static_cast<Eigen::Index>(t));
    for (std::size_t s = 0; s < q; ++s) {
      const auto idx = tokens.at(t, s);
      if (idx >= k)
        fail(ErrorCode::kCorruptTokens, "index " + std::to_string(idx) + " at frame " +
                                            std::to_string(t) + " stage " + std::to_string(s) +
                                            " exceeds codebook size " + std::to_string(k));
      add_entry(model.stages[s], idx, row, 1.0);
    }
  }
  return out;
}

std::vector<double> stage_distortions(const RvqModel& model, const LatentSequence& latents) {
  if (latents.dim() != model.config.latent_dim)
    fail(ErrorCode::kInvalidInput, "latent dimension does not match the model");
  Matrix residual = latents.frames;
  std::vector<double> out;
  for (const auto& stage : model.stages) {
    for (Eigen::Index i = 0; i < residual.rows(); ++i)
      quantize_stage(stage, row_span(residual, i));
    out.push_back(mean_squared_norm(residual));
  }
  return out;
}

double token_rate(const RvqConfig& config, std::size_t q) {
  if (q < 1 || q > config.stages)
    fail(ErrorCode::kInvalidInput, "q must be in [1, " + std::to_string(config.stages) + "]");
  return static_cast<double>(q) * config.frame_rate;
}

double bitrate(const RvqConfig& config, std::size_t q) {
  return token_rate(config, q) * bits_per_code(config.codebook_size);
}

}  // namespace rvqlab::rvq
