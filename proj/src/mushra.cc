#include "rvqlab/mushra.h"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "rvqlab/error.h"

namespace rvqlab::evalstats {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string row_error(std::size_t line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

}  // namespace

std::vector<MushraRecord> parse_mushra(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto pos = text.find('\n', start);
    lines.push_back(text.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }

  std::size_t header_line = 0;
  while (header_line < lines.size() && trim(lines[header_line]).empty()) ++header_line;
  if (header_line == lines.size()) fail(ErrorCode::kSchemaError, "MUSHRA file has no header");
  const char sep = lines[header_line].find('\t') != std::string_view::npos ? '\t' : ',';
  const auto header = split(lines[header_line], sep);

  constexpr std::array<std::string_view, 4> kColumns{"subject", "stimulus", "system", "score"};
  std::array<std::size_t, 4> column{};
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    const auto it = std::find(header.begin(), header.end(), kColumns[c]);
    if (it == header.end())
      fail(ErrorCode::kSchemaError, "MUSHRA header lacks column '" + std::string(kColumns[c]) + "'");
    column[c] = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<MushraRecord> records;
  for (std::size_t i = header_line + 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto fields = split(lines[i], sep);
    if (fields.size() != header.size())
      fail(ErrorCode::kSchemaError,
           row_error(i + 1, "expected " + std::to_string(header.size()) + " fields, got " +
                                std::to_string(fields.size())));
    MushraRecord r;
    r.subject = fields[column[0]];
    r.stimulus = fields[column[1]];
    r.system = fields[column[2]];
    if (r.subject.empty() || r.stimulus.empty() || r.system.empty())
      fail(ErrorCode::kSchemaError, row_error(i + 1, "empty identifier"));
    const auto score = fields[column[3]];
    const auto res = std::from_chars(score.data(), score.data() + score.size(), r.score);
    if (res.ec != std::errc{} || res.ptr != score.data() + score.size())
      fail(ErrorCode::kSchemaError, row_error(i + 1, "score '" + std::string(score) + "' is not a number"));
    records.push_back(std::move(r));
  }
  validate_records(records);
  return records;
}

std::vector<MushraRecord> load_mushra(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kMissingFile, path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_mushra(text.str());
}

void validate_records(const std::vector<MushraRecord>& records) {
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (const auto& r : records) {
    if (!(std::isfinite(r.score) && r.score >= 0.0 && r.score <= 100.0))
      fail(ErrorCode::kInvalidInput, "score " + std::to_string(r.score) + " outside [0, 100] for " +
                                         r.subject + "/" + r.stimulus + "/" + r.system);
    if (!seen.emplace(r.subject, r.stimulus, r.system).second)
      fail(ErrorCode::kInvalidInput,
           "duplicate record " + r.subject + "/" + r.stimulus + "/" + r.system);
  }
}

std::vector<std::string> system_labels(const std::vector<MushraRecord>& records) {
  std::vector<std::string> labels;
  for (const auto& r : records)
    if (std::find(labels.begin(), labels.end(), r.system) == labels.end()) labels.push_back(r.system);
  return labels;
}

std::vector<double> scores_for(const std::vector<MushraRecord>& records, std::string_view system) {
  std::vector<double> out;
  for (const auto& r : records)
    if (r.system == system) out.push_back(r.score);
  return out;
}

std::vector<SystemSummary> mushra_summary(const std::vector<MushraRecord>& records, double level) {
  validate_records(records);
  std::vector<SystemSummary> out;
  for (const auto& label : system_labels(records)) {
    const auto scores = scores_for(records, label);
    if (scores.size() < 2)
      fail(ErrorCode::kInsufficientData,
           "system '" + label + "' has " + std::to_string(scores.size()) + " score(s), need 2");
    out.push_back({label, t_interval(scores, level)});
  }
  return out;
}

std::vector<SignificanceResult> compare_to_reference(const std::vector<MushraRecord>& records,
                                                     std::string_view reference, double alpha) {
  validate_records(records);
  const auto labels = system_labels(records);
  if (std::find(labels.begin(), labels.end(), reference) == labels.end()) {
    std::string known;
    for (const auto& l : labels) known += (known.empty() ? "" : ", ") + l;
    fail(ErrorCode::kInvalidInput,
         "reference system '" + std::string(reference) + "' not found (systems: " + known + ")");
  }
  const auto ref = scores_for(records, reference);
  std::vector<SignificanceResult> out;
  for (const auto& label : labels) {
    if (label == reference) continue;
    const auto scores = scores_for(records, label);
    auto result = wilcoxon_ranksum(scores, ref, alpha);
    result.system = label;
    out.push_back(std::move(result));
  }
  return out;
}

}  // namespace rvqlab::evalstats
