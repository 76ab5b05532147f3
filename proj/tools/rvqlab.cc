// rvqlab: train, run and evaluate the residual-VQ speech codec.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rvqlab/bitstream.h"
#include "rvqlab/container.h"
#include "rvqlab/datapipe.h"
#include "rvqlab/error.h"
#include "rvqlab/evaluation.h"
#include "rvqlab/frontend.h"
#include "rvqlab/mushra.h"
#include "rvqlab/pesq.h"
#include "rvqlab/report.h"
#include "rvqlab/resample.h"
#include "rvqlab/rvq.h"
#include "rvqlab/synth.h"
#include "rvqlab/training.h"
#include "rvqlab/wav.h"

namespace {

using namespace rvqlab;
using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct Globals {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  bool json = false;
};

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kMissingFile, path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path);
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path);
}

// Numbers in text and JSON output go through the same %.6g rounding.
Json num(double v) { return evalstats::rounded(v); }
Json num(const std::optional<double>& v) { return v ? num(*v) : Json(nullptr); }
std::string txt(double v) { return evalstats::format_value(v); }

void print_json(const Json& j) { std::cout << j.dump(2) << '\n'; }

AudioBuffer load_at_24k(const std::string& path) {
  auto audio = read_wav(path);
  if (audio.sample_rate != codec::kSampleRate) audio = dsp::resample(audio, codec::kSampleRate);
  return audio;
}

// --- validate -------------------------------------------------------------

struct ValidateArgs {
  std::vector<std::string> manifests;
  std::size_t batch_size = 72;
};

void cmd_validate(const ValidateArgs& a, const Globals& g) {
  Json out = Json::array();
  for (const auto& path : a.manifests) {
    const auto m = datapipe::load_manifest(path);
    // Plans one batch to check balance feasibility without reading audio.
    datapipe::BatchSpec spec;
    spec.batch_size = a.batch_size;
    spec.seed = g.seed;
    datapipe::plan_batch(m, spec, 0);
    Json cats = Json::object();
    for (const auto& [c, s] : m.summary())
      cats[std::string(datapipe::category_name(c))] = {{"files", s.files}, {"hours", num(s.hours)}};
    out.push_back({{"manifest", path},
                   {"files", m.entries.size()},
                   {"hours", num(m.total_hours())},
                   {"categories", cats}});
    if (!g.json) {
      std::cout << path << ": " << m.entries.size() << " files, " << txt(m.total_hours())
                << " h, batch size " << a.batch_size << " ok\n";
      for (const auto& [c, s] : m.summary())
        std::cout << "  " << datapipe::category_name(c) << "  files " << s.files << "  hours "
                  << txt(s.hours) << '\n';
    }
  }
  if (g.json) print_json(out);
}

// --- synth ----------------------------------------------------------------

struct SynthArgs {
  std::string out_dir;
  std::size_t train_files = 12;
  std::size_t test_files = 6;
  double seconds = 4.0;
};

void cmd_synth(const SynthArgs& a, const Globals& g) {
  if (a.seconds <= 0) fail(ErrorCode::kInvalidConfig, "--seconds must be positive");
  fs::create_directories(a.out_dir);
  Json out = Json::object();
  std::uint64_t clip = 0;
  for (const auto& [split, count] : {std::pair{"train", a.train_files}, std::pair{"test", a.test_files}}) {
    std::vector<datapipe::ManifestEntry> entries;
    for (std::size_t i = 0; i < count; ++i, ++clip) {
      // Categories rotate; quality drops from HQ to UQ as noise grows.
      const auto category = datapipe::kAllCategories[i % datapipe::kAllCategories.size()];
      const auto rank = static_cast<double>(static_cast<int>(category));
      synth::SpeechOptions opts;
      opts.duration_seconds = a.seconds;
      opts.noise_fraction = 0.02 * rank;
      const auto audio = synth::speech_like(opts, g.seed * 1000003u + clip);
      const std::string name = std::string(split) + "_" + std::to_string(i) + ".wav";
      write_wav((fs::path(a.out_dir) / name).string(), audio);
      entries.push_back({name, category, audio.duration_seconds(), audio.sample_rate});
    }
    const auto manifest = (fs::path(a.out_dir) / (std::string(split) + ".jsonl")).string();
    datapipe::write_manifest(manifest, entries);
    out[split] = {{"manifest", manifest}, {"files", count}};
    if (!g.json) std::cout << "wrote " << manifest << " (" << count << " files)\n";
  }
  if (g.json) print_json(out);
}

// --- train ----------------------------------------------------------------

struct TrainArgs {
  std::string manifest;
  std::string out;
  std::size_t stages = 32;
  std::size_t codebook_size = 1024;
  std::size_t latent_dim = 64;
  std::size_t code_dim = 8;
  std::size_t iterations = 100;
  std::size_t batches = 0;
  std::size_t batch_size = 72;
  std::size_t max_frames = 0;
};

void cmd_train(const TrainArgs& a, const Globals& g) {
  const auto manifest = datapipe::load_manifest(a.manifest);
  training::TrainOptions o;
  o.latent_dim = a.latent_dim;
  o.rvq.stages = a.stages;
  o.rvq.codebook_size = a.codebook_size;
  o.rvq.code_dim = a.code_dim;
  o.rvq.max_iterations = a.iterations;
  o.rvq.max_training_frames = a.max_frames;
  o.seed = g.seed;
  o.batches = a.batches;
  o.batch_size = a.batch_size;
  o.threads = g.threads;
  o.creation_time = training::source_date_epoch();
  const auto result = training::train_codec(manifest, o);
  const auto bytes = codec::serialize(result.model);
  write_bytes(a.out, bytes);
  codec::Fnv1a hash;
  hash.update(bytes);

  const auto& mse = result.model.rvq.training_mse;
  if (g.json) {
    Json excerpts = Json::object();
    for (const auto& [c, n] : result.excerpts) excerpts[std::string(datapipe::category_name(c))] = n;
    Json stages = Json::array();
    for (double v : mse) stages.push_back(num(v));
    print_json({{"model", a.out},
                {"model_fnv1a", hash.hex()},
                {"batches", result.batches},
                {"frames", result.frames},
                {"excerpts_per_category", excerpts},
                {"stage_mse", stages},
                {"bitrate_bps", num(rvq::bitrate(result.model.rvq.config, a.stages))}});
    return;
  }
  std::cout << "trained " << a.stages << " stages x " << a.codebook_size << " entries, latent dim "
            << a.latent_dim << ", on " << result.frames << " frames from " << result.batches
            << " batches of " << a.batch_size << '\n';
  std::cout << "excerpts per category:";
  for (const auto& [c, n] : result.excerpts) std::cout << ' ' << datapipe::category_name(c) << '=' << n;
  std::cout << "\nstage  training_mse\n";
  for (std::size_t s = 0; s < mse.size(); ++s) std::cout << s + 1 << "  " << txt(mse[s]) << '\n';
  std::cout << "wrote " << a.out << " (" << bytes.size() << " bytes, fnv1a " << hash.hex() << ")\n";
}

// --- encode / decode --------------------------------------------------------

struct EncodeArgs {
  std::string model, input, out;
  std::size_t q = 4;
};

void cmd_encode(const EncodeArgs& a, const Globals& g) {
  const auto model = codec::load(a.model);
  const auto audio = read_wav(a.input);
  if (audio.sample_rate != codec::kSampleRate)
    fail(ErrorCode::kSampleRateMismatch, a.input + " is " + std::to_string(audio.sample_rate) +
                                             " Hz; the codec takes 24000 Hz input");
  const auto tokens =
      rvq::quantize(model.rvq, codec::encode_latent(model.frontend, audio), a.q);
  const auto bytes = bitstream::pack(tokens, codec::kSampleRate);
  write_bytes(a.out, bytes);
  const std::size_t payload = bytes.size() - bitstream::kHeaderSize;
  const double bps = rvq::bitrate(model.rvq.config, a.q);
  if (g.json) {
    print_json({{"stream", a.out},
                {"frames", tokens.frames},
                {"q", a.q},
                {"bytes", bytes.size()},
                {"payload_bytes", payload},
                {"bitrate_bps", num(bps)}});
    return;
  }
  std::cout << "wrote " << a.out << ": " << tokens.frames << " frames, q=" << a.q << ", "
            << bytes.size() << " bytes (" << bitstream::kHeaderSize << " header + " << payload
            << " payload), " << txt(bps) << " bps\n";
}

struct DecodeArgs {
  std::string model, input, out;
  std::size_t q = 0;  // 0 = all stages in the stream
  int gl_iterations = 32;
};

void cmd_decode(const DecodeArgs& a, const Globals& g) {
  const auto model = codec::load(a.model);
  const auto bytes = read_bytes(a.input);
  bitstream::Decoded stream;
  try {
    stream = bitstream::unpack(bytes);
  } catch (const Error& e) {
    fail(ErrorCode::kCorruptTokens, a.input + ": " + e.what());
  }
  const auto& h = stream.header;
  if (h.codebook_size != model.rvq.config.codebook_size || h.frame_rate != model.rvq.config.frame_rate ||
      h.sample_rate != static_cast<std::uint32_t>(codec::kSampleRate) || h.stages > model.rvq.config.stages)
    fail(ErrorCode::kCorruptTokens,
         a.input + ": stream (K=" + std::to_string(h.codebook_size) + ", " +
             std::to_string(h.frame_rate) + " Hz, q=" + std::to_string(h.stages) +
             ") does not match the model");
  const std::size_t q = a.q ? a.q : h.stages;
  if (q > h.stages)
    fail(ErrorCode::kInvalidInput, "q=" + std::to_string(q) + " exceeds the stream's " +
                                       std::to_string(h.stages) + " codebooks");
  const auto latents = rvq::dequantize(model.rvq, stream.tokens, q);
  const auto audio =
      to_float32_precision(codec::decode_latent(model.frontend, latents, a.gl_iterations));
  write_wav(a.out, audio, WavFormat::kFloat32);
  if (g.json) {
    print_json({{"wav", a.out}, {"frames", h.frames}, {"q", q}, {"samples", audio.size()}});
    return;
  }
  std::cout << "wrote " << a.out << ": " << audio.size() << " samples from " << h.frames
            << " frames at q=" << q << '\n';
}

// --- metrics ----------------------------------------------------------------

struct MetricsArgs {
  std::string reference, test, pesq_tool;
};

void cmd_metrics(const MetricsArgs& a, const Globals& g) {
  const auto ref = load_at_24k(a.reference);
  const auto test = read_wav(a.test);
  const auto s = evalstats::score_pair(ref, test, metrics::default_multiscale(codec::kSampleRate),
                                       metrics::pesq_tool_path(a.pesq_tool));
  if (g.json) {
    print_json({{"mel", num(s.mel)}, {"stft", num(s.stft)}, {"pesq", num(s.pesq)}, {"stoi", num(s.stoi)}});
    return;
  }
  std::cout << "mel " << txt(s.mel) << "\nstft " << txt(s.stft) << "\npesq "
            << evalstats::format_value(s.pesq) << "\nstoi " << txt(s.stoi) << '\n';
}

// --- eval -------------------------------------------------------------------

struct EvalArgs {
  std::vector<std::string> models;  // [label=]path
  std::vector<std::string> tests;   // [name=]manifest
  std::vector<std::size_t> q = {32, 16, 8, 4, 2, 1};
  std::string format = "markdown";
  std::string out;
  std::string per_file;
  std::string pesq_tool;
  int gl_iterations = 32;
  double max_failure_rate = 0.01;
};

std::pair<std::string, std::string> split_label(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos) return {fs::path(arg).stem().string(), arg};
  return {arg.substr(0, eq), arg.substr(eq + 1)};
}

void cmd_eval(const EvalArgs& a, const Globals& g) {
  const auto format = evalstats::parse_format(a.format);
  std::vector<evalstats::TestSet> sets;
  for (const auto& t : a.tests) {
    auto [name, path] = split_label(t);
    sets.push_back({name, datapipe::load_manifest(path)});
  }
  evalstats::EvalConfig cfg;
  cfg.q_list = a.q;
  cfg.gl_iterations = a.gl_iterations;
  cfg.pesq_tool = a.pesq_tool;
  cfg.threads = g.threads;
  cfg.max_failure_rate = a.max_failure_rate;

  std::vector<evalstats::MetricReport> reports;
  std::ostringstream per_file;
  per_file << "system,test_set,path,q,latent_mse,mel,stft,pesq,stoi,error\n";
  for (const auto& m : a.models) {
    auto [label, path] = split_label(m);
    if (a.models.size() == 1 && m.find('=') == std::string::npos) label = "rvq";
    const auto model = codec::load(path);
    auto run = evalstats::run_evaluation(model, sets, cfg, label);
    for (const auto& f : run.files) {
      if (f.failed()) {
        per_file << label << ',' << f.test_set << ',' << f.path << ",,,,,,,\"" << f.error << "\"\n";
        continue;
      }
      for (const auto& s : f.per_q)
        per_file << label << ',' << f.test_set << ',' << f.path << ',' << s.q << ','
                 << txt(s.latent_mse) << ',' << txt(s.scores.mel) << ',' << txt(s.scores.stft)
                 << ',' << evalstats::format_value(s.scores.pesq) << ',' << txt(s.scores.stoi)
                 << ",\n";
    }
    reports.push_back(std::move(run.report));
  }
  const auto report = evalstats::merge_reports(reports);
  if (!a.per_file.empty()) write_text(a.per_file, per_file.str());

  if (g.json) {
    Json rows = Json::array();
    for (const auto& r : report.rows) {
      Json cells = Json::array();
      for (const auto& c : r.cells) cells.push_back(num(c));
      rows.push_back({{"test_set", r.test_set},
                      {"metric", r.metric},
                      {"system", r.system},
                      {"higher_is_better", r.higher_is_better},
                      {"values", cells}});
    }
    Json config = Json::object();
    for (const auto& [k, v] : report.config) config[k] = v;
    const Json j = {{"q", report.q_columns}, {"rows", rows}, {"config", config}};
    write_text(a.out, j.dump(2) + "\n");
    return;
  }
  write_text(a.out, evalstats::render_report(report, format));
}

// --- mushra -----------------------------------------------------------------

struct MushraArgs {
  std::string scores;
  std::string reference = "reference";
  double alpha = 0.05;
  std::string format = "markdown";
};

void cmd_mushra(const MushraArgs& a, const Globals& g) {
  const auto format = evalstats::parse_format(a.format);
  const auto records = evalstats::load_mushra(a.scores);
  evalstats::MushraReport report;
  report.reference = a.reference;
  report.summaries = evalstats::mushra_summary(records);
  report.significance = evalstats::compare_to_reference(records, a.reference, a.alpha);
  if (!g.json) {
    std::cout << evalstats::render_mushra(report, format);
    return;
  }
  Json systems = Json::array();
  for (const auto& s : report.summaries) {
    Json entry = {{"system", s.system},
                  {"n", s.interval.n},
                  {"mean", num(s.interval.mean)},
                  {"ci_low", num(s.interval.lower())},
                  {"ci_high", num(s.interval.upper())},
                  {"half_width", num(s.interval.half_width)}};
    for (const auto& r : report.significance)
      if (r.system == s.system) {
        entry["p_value"] = num(r.p_value);
        entry["significant"] = r.significant;
        entry["method"] = evalstats::method_name(r.method);
      }
    systems.push_back(entry);
  }
  print_json({{"reference", a.reference}, {"alpha", num(a.alpha)}, {"systems", systems}});
}

int report_error(ErrorCode code, const std::string& what) {
  std::cerr << "error: " << what << '\n';
  return code == ErrorCode::kMissingFile ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Residual-VQ speech codec: training, coding and evaluation", "rvqlab"};
  app.set_config("--config", "", "TOML/INI file with option defaults; flags override it");
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (output does not depend on it)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_flag("--json", g.json, "Machine-readable output");

  ValidateArgs va;
  auto* validate = app.add_subcommand("validate", "Check manifests and category balance");
  validate->add_option("manifests", va.manifests, "Manifest files (JSONL)")->required();
  validate->add_option("--batch-size", va.batch_size, "Batch size to check")->capture_default_str();

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Write a synthetic speech-like corpus and manifests");
  synth->add_option("--out", sa.out_dir, "Output directory")->required();
  synth->add_option("--train-files", sa.train_files)->capture_default_str();
  synth->add_option("--test-files", sa.test_files)->capture_default_str();
  synth->add_option("--seconds", sa.seconds, "Clip length")->capture_default_str();

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Fit the front end and RVQ on a manifest");
  train->add_option("--manifest", ta.manifest)->required();
  train->add_option("--out", ta.out, "Model file")->required();
  train->add_option("-Q,--stages", ta.stages)->capture_default_str();
  train->add_option("-K,--codebook-size", ta.codebook_size)->capture_default_str();
  train->add_option("-D,--latent-dim", ta.latent_dim)->capture_default_str();
  train->add_option("--code-dim", ta.code_dim)->capture_default_str();
  train->add_option("--iterations", ta.iterations, "Lloyd iterations per stage")->capture_default_str();
  train->add_option("--batches", ta.batches, "0 = automatic")->capture_default_str();
  train->add_option("--batch-size", ta.batch_size)->capture_default_str();
  train->add_option("--max-frames", ta.max_frames, "Frame subsample per stage, 0 = all")
      ->capture_default_str();

  EncodeArgs ea;
  auto* encode = app.add_subcommand("encode", "WAV (24 kHz) to token stream");
  encode->add_option("--model", ea.model)->required();
  encode->add_option("--in", ea.input)->required();
  encode->add_option("--out", ea.out)->required();
  encode->add_option("-q,--q", ea.q, "Codebooks to transmit")->capture_default_str();

  DecodeArgs da;
  auto* decode = app.add_subcommand("decode", "Token stream to WAV");
  decode->add_option("--model", da.model)->required();
  decode->add_option("--in", da.input)->required();
  decode->add_option("--out", da.out)->required();
  decode->add_option("-q,--q", da.q, "Codebooks to use, 0 = all in the stream")->capture_default_str();
  decode->add_option("--gl-iterations", da.gl_iterations)->capture_default_str();

  MetricsArgs ma;
  auto* metric = app.add_subcommand("metrics", "Score a decoded WAV against its reference");
  metric->add_option("--ref", ma.reference)->required();
  metric->add_option("--test", ma.test)->required();
  metric->add_option("--pesq-tool", ma.pesq_tool);

  EvalArgs xa;
  auto* eval = app.add_subcommand("eval", "Objective metrics over test sets and codebook counts");
  eval->add_option("--model", xa.models, "[label=]model, repeat for ablations")->required();
  eval->add_option("--test", xa.tests, "[name=]manifest, repeatable")->required();
  eval->add_option("--q", xa.q, "Codebook counts")->delimiter(',')->capture_default_str();
  eval->add_option("--format", xa.format, "csv or markdown")->capture_default_str();
  eval->add_option("--out", xa.out, "Report file (default stdout)");
  eval->add_option("--per-file", xa.per_file, "Per-file CSV");
  eval->add_option("--pesq-tool", xa.pesq_tool);
  eval->add_option("--gl-iterations", xa.gl_iterations)->capture_default_str();
  eval->add_option("--max-failure-rate", xa.max_failure_rate)->capture_default_str();

  MushraArgs ua;
  auto* mushra = app.add_subcommand("mushra", "MUSHRA means, 95% intervals and rank-sum tests");
  mushra->add_option("--scores", ua.scores)->required();
  mushra->add_option("--reference", ua.reference, "Hidden reference label")->capture_default_str();
  mushra->add_option("--alpha", ua.alpha)->capture_default_str();
  mushra->add_option("--format", ua.format, "csv or markdown")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*validate) cmd_validate(va, g);
    if (*synth) cmd_synth(sa, g);
    if (*train) cmd_train(ta, g);
    if (*encode) cmd_encode(ea, g);
    if (*decode) cmd_decode(da, g);
    if (*metric) cmd_metrics(ma, g);
    if (*eval) cmd_eval(xa, g);
    if (*mushra) cmd_mushra(ua, g);
  } catch (const Error& e) {
    return report_error(e.code(), e.what());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
