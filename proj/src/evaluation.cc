#include "rvqlab/evaluation.h"

#include <algorithm>
#include <cstdio>
#include <set>

#include "parallel.h"
#include "rvqlab/error.h"
#include "rvqlab/frontend.h"
#include "rvqlab/pesq.h"
#include "rvqlab/resample.h"
#include "rvqlab/rvq.h"
#include "rvqlab/stoi.h"
#include "rvqlab/wav.h"

namespace rvqlab::evalstats {
namespace {

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (auto x : v) out += (out.empty() ? "" : ",") + std::to_string(x);
  return out;
}

double latent_mse(const LatentSequence& a, const LatentSequence& b) {
  return (a.frames - b.frames).squaredNorm() / static_cast<double>(a.frames.size());
}

FileResult evaluate_file(const codec::ModelContainer& model, const std::string& set,
                         const std::string& path, const std::vector<std::size_t>& qs,
                         const EvalConfig& config, const metrics::MultiScaleConfig& mcfg,
                         const std::string& pesq_tool, const AudioLoader& loader) {
  FileResult result{set, path, {}, {}};
  try {
    AudioBuffer reference = loader ? loader(path) : read_wav(path);
    if (reference.sample_rate != codec::kSampleRate)
      reference = dsp::resample(reference, codec::kSampleRate);
    const auto latents = codec::encode_latent(model.frontend, reference);
    for (auto q : qs) {
      const auto tokens = rvq::quantize(model.rvq, latents, q);
      const auto restored = rvq::dequantize(model.rvq, tokens, q);
      auto decoded = to_float32_precision(
          codec::decode_latent(model.frontend, restored, config.gl_iterations));
      result.per_q.push_back(
          {q, latent_mse(latents, restored), score_pair(reference, decoded, mcfg, pesq_tool)});
    }
  } catch (const Error& e) {
    result.per_q.clear();
    result.error = e.what();
  }
  return result;
}

std::optional<double> metric_of(const FileScore& s, std::string_view metric) {
  if (metric == "latent_mse") return s.latent_mse;
  if (metric == "mel") return s.scores.mel;
  if (metric == "stft") return s.scores.stft;
  if (metric == "stoi") return s.scores.stoi;
  return s.scores.pesq;
}

std::string format_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

PairScore score_pair(const AudioBuffer& reference, const AudioBuffer& decoded,
                     const metrics::MultiScaleConfig& config, const std::string& pesq_tool) {
  AudioBuffer test = decoded;
  if (test.size() > reference.size()) test.samples.resize(reference.size());
  PairScore s;
  s.mel = metrics::mel_loss(reference, test, config).value;
  s.stft = metrics::stft_loss(reference, test, config).value;
  s.stoi = metrics::stoi(reference, test).value;
  if (!pesq_tool.empty())
    if (auto p = metrics::pesq(reference, test, pesq_tool)) s.pesq = p->value;
  return s;
}

AudioBuffer reconstruct(const codec::ModelContainer& model, const LatentSequence& latents,
                        std::size_t q, int gl_iterations) {
  const auto tokens = rvq::quantize(model.rvq, latents, q);
  return to_float32_precision(
      codec::decode_latent(model.frontend, rvq::dequantize(model.rvq, tokens, q), gl_iterations));
}

const ReportRow* MetricReport::find(const std::string& test_set, const std::string& metric,
                                    const std::string& system) const {
  for (const auto& row : rows)
    if (row.test_set == test_set && row.metric == metric && row.system == system) return &row;
  return nullptr;
}

std::optional<double> MetricReport::at(const std::string& test_set, const std::string& metric,
                                       const std::string& system, std::size_t q) const {
  const auto* row = find(test_set, metric, system);
  const auto col = std::find(q_columns.begin(), q_columns.end(), q);
  if (!row || col == q_columns.end()) return std::nullopt;
  return row->cells[static_cast<std::size_t>(col - q_columns.begin())];
}

EvaluationRun run_evaluation(const codec::ModelContainer& model, std::span<const TestSet> sets,
                             const EvalConfig& config, const std::string& system,
                             const AudioLoader& loader) {
  const std::size_t stages = model.rvq.config.stages;
  if (config.q_list.empty()) fail(ErrorCode::kInvalidConfig, "empty q list");
  std::set<std::size_t> unique(config.q_list.begin(), config.q_list.end());
  for (auto q : unique)
    if (q < 1 || q > stages)
      fail(ErrorCode::kInvalidConfig,
           "q=" + std::to_string(q) + " outside 1.." + std::to_string(stages));
  const std::vector<std::size_t> qs(unique.rbegin(), unique.rend());
  if (sets.empty()) fail(ErrorCode::kEmptyInput, "no test sets");
  for (const auto& set : sets)
    if (set.manifest.entries.empty()) fail(ErrorCode::kEmptyInput, "test set '" + set.name + "' is empty");
  if (!(config.max_failure_rate >= 0 && config.max_failure_rate <= 1))
    fail(ErrorCode::kInvalidConfig, "failure threshold must be in [0, 1]");

  const auto mcfg =
      config.metrics.scales.empty() ? metrics::default_multiscale(codec::kSampleRate) : config.metrics;
  const auto pesq_tool = metrics::pesq_tool_path(config.pesq_tool);

  struct Job {
    std::size_t set;
    std::string path;
  };
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < sets.size(); ++s)
    for (const auto& entry : sets[s].manifest.entries)
      jobs.push_back({s, sets[s].manifest.resolve(entry)});

  EvaluationRun run;
  run.files.resize(jobs.size());
  detail::parallel_for(jobs.size(), config.threads, [&](std::size_t i) {
    run.files[i] = evaluate_file(model, sets[jobs[i].set].name, jobs[i].path, qs, config, mcfg,
                                 pesq_tool, loader);
  });

  std::size_t failures = 0;
  const FileResult* first_failure = nullptr;
  for (const auto& f : run.files)
    if (f.failed()) {
      ++failures;
      if (!first_failure) first_failure = &f;
    }
  if (static_cast<double>(failures) > config.max_failure_rate * static_cast<double>(jobs.size()))
    fail(ErrorCode::kInvalidInput, std::to_string(failures) + " of " + std::to_string(jobs.size()) +
                                       " files failed; first: " + first_failure->path + ": " +
                                       first_failure->error);

  auto& report = run.report;
  report.q_columns = qs;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    for (const char* metric : kMetricNames) {
      ReportRow row{sets[s].name, metric, system,
                    std::string_view(metric) == "stoi" || std::string_view(metric) == "pesq",
                    std::vector<std::optional<double>>(qs.size())};
      for (std::size_t c = 0; c < qs.size(); ++c) {
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < jobs.size(); ++i) {
          if (jobs[i].set != s || run.files[i].failed()) continue;
          if (auto v = metric_of(run.files[i].per_q[c], metric)) {
            sum += *v;
            ++count;
          }
        }
        if (count > 0) row.cells[c] = sum / static_cast<double>(count);
      }
      report.rows.push_back(std::move(row));
    }
  }

  codec::Fnv1a hash;
  hash.update(codec::serialize(model));
  std::string set_sizes;
  for (const auto& set : sets)
    set_sizes += (set_sizes.empty() ? "" : ",") + set.name + ":" +
                 std::to_string(set.manifest.entries.size());
  report.config = {
      {"system", system},
      {"model_fnv1a", hash.hex()},
      {"q", join_sizes(qs)},
      {"metrics", metrics::describe(mcfg)},
      {"griffin_lim_iterations", std::to_string(config.gl_iterations)},
      {"pesq", pesq_tool.empty() ? "unconfigured" : "external"},
      {"test_sets", set_sizes},
      {"failed_files", std::to_string(failures)},
      {"max_failure_rate", format_g(config.max_failure_rate)},
  };
  return run;
}

MetricReport merge_reports(std::span<const MetricReport> reports) {
  MetricReport out;
  if (reports.empty()) return out;
  out.q_columns = reports.front().q_columns;
  std::vector<std::string> sets;
  for (const auto& r : reports) {
    if (r.q_columns != out.q_columns)
      fail(ErrorCode::kInvalidInput, "reports have different q columns");
    for (const auto& row : r.rows)
      if (std::find(sets.begin(), sets.end(), row.test_set) == sets.end()) sets.push_back(row.test_set);
  }
  std::vector<std::string> metrics;
  for (const char* m : kMetricNames) metrics.emplace_back(m);
  for (const auto& r : reports)
    for (const auto& row : r.rows)
      if (std::find(metrics.begin(), metrics.end(), row.metric) == metrics.end())
        metrics.push_back(row.metric);
  for (const auto& set : sets)
    for (const auto& metric : metrics)
      for (const auto& r : reports)
        for (const auto& row : r.rows)
          if (row.test_set == set && row.metric == metric) out.rows.push_back(row);
  for (std::size_t i = 0; i < reports.size(); ++i)
    for (const auto& [k, v] : reports[i].config)
      out.config.emplace_back(reports.size() == 1 ? k : "report" + std::to_string(i + 1) + "." + k, v);
  return out;
}

}  // namespace rvqlab::evalstats
