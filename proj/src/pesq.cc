#include "rvqlab/pesq.h"

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <regex>

#include "rvqlab/error.h"
#include "rvqlab/resample.h"
#include "rvqlab/wav.h"

namespace rvqlab::metrics {
namespace {

constexpr int kPesqRate = 16000;

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  return out + "'";
}

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "rvqlab-pesq-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) fail(ErrorCode::kIoError, "cannot create a temporary directory");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

AudioBuffer at_16k(const AudioBuffer& a, std::size_t n) {
  AudioBuffer cut{std::vector<double>(a.samples.begin(), a.samples.begin() + n), a.sample_rate};
  return dsp::resample(cut, kPesqRate);
}

}  // namespace

std::string pesq_tool_path(const std::string& explicit_path) {
  if (!explicit_path.empty()) return explicit_path;
  const char* env = std::getenv(kPesqToolEnv);
  return env ? std::string(env) : std::string();
}

double parse_pesq_output(const std::string& output) {
  static const std::regex number(R"([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)");
  std::string last;
  for (auto it = std::sregex_iterator(output.begin(), output.end(), number);
       it != std::sregex_iterator(); ++it)
    last = it->str();
  if (last.empty()) fail(ErrorCode::kExternalToolError, "no score in PESQ output: " + output);
  const double v = std::strtod(last.c_str(), nullptr);
  // The wideband mapping tops out at 4.6439; allow that rounding margin.
  if (!(v >= kPesqMin && v <= kPesqMax + kPesqSlack))
    fail(ErrorCode::kExternalToolError, "PESQ score " + last + " outside [-0.5, 4.64]");
  return std::min(v, kPesqMax);
}

std::optional<MetricValue> pesq(const AudioBuffer& ref, const AudioBuffer& test,
                                const std::string& tool_path) {
  const auto tool = pesq_tool_path(tool_path);
  if (tool.empty()) return std::nullopt;
  if (ref.sample_rate != test.sample_rate)
    fail(ErrorCode::kSampleRateMismatch, "PESQ inputs at different sample rates");
  const auto n = std::min(ref.size(), test.size());
  if (n == 0) fail(ErrorCode::kEmptyInput, "PESQ of empty audio");

  TempDir dir;
  const auto ref_path = (dir.path() / "reference.wav").string();
  const auto test_path = (dir.path() / "degraded.wav").string();
  write_wav(ref_path, at_16k(ref, n), WavFormat::kPcm16);
  write_wav(test_path, at_16k(test, n), WavFormat::kPcm16);

  const std::string cmd =
      shell_quote(tool) + " " + shell_quote(ref_path) + " " + shell_quote(test_path) + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) fail(ErrorCode::kExternalToolError, "cannot start " + tool);
  std::string output;
  std::array<char, 4096> buf;
  while (std::size_t got = std::fread(buf.data(), 1, buf.size(), pipe))
    output.append(buf.data(), got);
  const int status = pclose(pipe);
  if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0)
    fail(ErrorCode::kExternalToolError,
         tool + " exited with status " +
             std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : status) + ": " + output);
  return MetricValue{"pesq", parse_pesq_output(output), true};
}

}  // namespace rvqlab::metrics
