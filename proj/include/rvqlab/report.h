#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "rvqlab/evaluation.h"
#include "rvqlab/mushra.h"

namespace rvqlab::evalstats {

enum class ReportFormat { kCsv, kMarkdown };

// Parses "csv" or "markdown" (also "md"); InvalidConfig otherwise.
ReportFormat parse_format(std::string_view name);

inline constexpr const char* kAbsent = "\xE2\x80\x94";  // U+2014

// %.6g, or the absent marker.
std::string format_value(std::optional<double> value);
// The value that format_value prints, parsed back.
double rounded(double value);

// Grid with one line per row and one column per q, followed by the config
// snapshot ("# key = value" lines in CSV, a bullet list in Markdown).
std::string render_report(const MetricReport& report, ReportFormat format);

// Reads the CSV form back. SchemaError on malformed input.
MetricReport parse_report_csv(std::string_view text);

struct MushraReport {
  std::vector<SystemSummary> summaries;
  std::vector<SignificanceResult> significance;  // vs reference
  std::string reference;
};

std::string render_mushra(const MushraReport& report, ReportFormat format);

}  // namespace rvqlab::evalstats
