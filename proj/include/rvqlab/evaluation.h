#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rvqlab/audio.h"
#include "rvqlab/container.h"
#include "rvqlab/datapipe.h"
#include "rvqlab/metrics.h"

namespace rvqlab::evalstats {

// Row order within a test set.
inline constexpr const char* kMetricNames[] = {"latent_mse", "mel", "stft", "pesq", "stoi"};

struct TestSet {
  std::string name;
  datapipe::Manifest manifest;
};

struct EvalConfig {
  std::vector<std::size_t> q_list;      // reported in descending order
  metrics::MultiScaleConfig metrics;    // no scales: default_multiscale(24000)
  int gl_iterations = 32;
  std::string pesq_tool;                // empty: $RVQLAB_PESQ_TOOL, else PESQ absent
  std::size_t threads = 1;
  double max_failure_rate = 0.01;
};

// Scores of one decoded signal against its reference. The decoded signal is
// truncated to the reference length. pesq is empty when no tool is set.
struct PairScore {
  double mel = 0.0;
  double stft = 0.0;
  double stoi = 0.0;
  std::optional<double> pesq;
};

PairScore score_pair(const AudioBuffer& reference, const AudioBuffer& decoded,
                     const metrics::MultiScaleConfig& config, const std::string& pesq_tool);

// The codec path for one stream prefix: quantize at q, dequantize, decode,
// round to float32.
AudioBuffer reconstruct(const codec::ModelContainer& model, const LatentSequence& latents,
                        std::size_t q, int gl_iterations);

struct FileScore {
  std::size_t q = 0;
  double latent_mse = 0.0;
  PairScore scores;
};

struct FileResult {
  std::string test_set;
  std::string path;
  std::vector<FileScore> per_q;  // same order as the report columns
  std::string error;             // "Name: detail" when the file failed

  bool failed() const noexcept { return !error.empty(); }
};

struct ReportRow {
  std::string test_set;
  std::string metric;
  std::string system;
  bool higher_is_better = false;
  std::vector<std::optional<double>> cells;  // one per q column; empty = absent
};

struct MetricReport {
  std::vector<std::size_t> q_columns;  // descending
  std::vector<ReportRow> rows;
  std::vector<std::pair<std::string, std::string>> config;

  const ReportRow* find(const std::string& test_set, const std::string& metric,
                        const std::string& system) const;
  std::optional<double> at(const std::string& test_set, const std::string& metric,
                           const std::string& system, std::size_t q) const;
};

struct EvaluationRun {
  MetricReport report;
  std::vector<FileResult> files;  // manifest order
};

using AudioLoader = datapipe::AudioLoader;

// Encodes every file of every test set, reconstructs it at each q and scores
// it against the original (resampled to 24 kHz when needed). Cells hold the
// unweighted mean over the files of a set that succeeded. Per-file failures
// are recorded; the run fails with the first file's error when the failure
// rate exceeds config.max_failure_rate. InvalidConfig for an empty or
// out-of-range q list, EmptyInput for no test sets or an empty set.
EvaluationRun run_evaluation(const codec::ModelContainer& model, std::span<const TestSet> sets,
                             const EvalConfig& config, const std::string& system = "rvq",
                             const AudioLoader& loader = {});

// Stacks reports of several systems over the same q columns, grouping rows
// by test set, then metric, then report order. InvalidInput when the
// columns differ.
MetricReport merge_reports(std::span<const MetricReport> reports);

}  // namespace rvqlab::evalstats
