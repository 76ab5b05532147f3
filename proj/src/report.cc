#include "rvqlab/report.h"

#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "rvqlab/error.h"

namespace rvqlab::evalstats {
namespace {

std::string column_name(std::size_t q) { return "q" + std::to_string(q); }

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool higher_is_better(std::string_view metric) { return metric == "stoi" || metric == "pesq"; }

const SignificanceResult* significance_for(const MushraReport& r, const std::string& system) {
  for (const auto& s : r.significance)
    if (s.system == system) return &s;
  return nullptr;
}

}  // namespace

ReportFormat parse_format(std::string_view name) {
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "markdown" || name == "md") return ReportFormat::kMarkdown;
  fail(ErrorCode::kInvalidConfig, "unknown report format '" + std::string(name) + "'");
}

std::string format_value(std::optional<double> value) {
  if (!value) return kAbsent;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", *value);
  return buf;
}

double rounded(double value) { return std::strtod(format_value(value).c_str(), nullptr); }

std::string render_report(const MetricReport& report, ReportFormat format) {
  std::ostringstream out;
  if (format == ReportFormat::kCsv) {
    out << "test_set,metric,system";
    for (auto q : report.q_columns) out << ',' << column_name(q);
    out << '\n';
    for (const auto& row : report.rows) {
      out << row.test_set << ',' << row.metric << ',' << row.system;
      for (const auto& cell : row.cells) out << ',' << format_value(cell);
      out << '\n';
    }
    for (const auto& [k, v] : report.config) out << "# " << k << " = " << v << '\n';
    return out.str();
  }

  out << "| test set | metric | system |";
  for (auto q : report.q_columns) out << " q=" << q << " |";
  out << "\n|---|---|---|";
  for (std::size_t i = 0; i < report.q_columns.size(); ++i) out << "---:|";
  out << '\n';
  for (const auto& row : report.rows) {
    out << "| " << row.test_set << " | " << row.metric << (row.higher_is_better ? " (higher)" : " (lower)")
        << " | " << row.system << " |";
    for (const auto& cell : row.cells) out << ' ' << format_value(cell) << " |";
    out << '\n';
  }
  if (!report.config.empty()) {
    out << "\nConfiguration:\n\n";
    for (const auto& [k, v] : report.config) out << "- " << k << ": " << v << '\n';
  }
  return out.str();
}

MetricReport parse_report_csv(std::string_view text) {
  MetricReport report;
  std::istringstream in{std::string(text)};
  std::string line;
  bool header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find(" = ");
      if (eq == std::string::npos)
        fail(ErrorCode::kSchemaError, "line " + std::to_string(line_no) + ": bad config line");
      report.config.emplace_back(line.substr(2, eq - 2), line.substr(eq + 3));
      continue;
    }
    const auto fields = split_csv(line);
    if (!header) {
      if (fields.size() < 3 || fields[0] != "test_set" || fields[1] != "metric" || fields[2] != "system")
        fail(ErrorCode::kSchemaError, "report header must start with test_set,metric,system");
      for (std::size_t i = 3; i < fields.size(); ++i) {
        if (fields[i].size() < 2 || fields[i][0] != 'q')
          fail(ErrorCode::kSchemaError, "bad column '" + fields[i] + "'");
        report.q_columns.push_back(std::stoul(fields[i].substr(1)));
      }
      header = true;
      continue;
    }
    if (fields.size() != 3 + report.q_columns.size())
      fail(ErrorCode::kSchemaError, "line " + std::to_string(line_no) + ": wrong field count");
    ReportRow row{fields[0], fields[1], fields[2], higher_is_better(fields[1]), {}};
    for (std::size_t i = 3; i < fields.size(); ++i) {
      if (fields[i] == kAbsent) {
        row.cells.emplace_back();
        continue;
      }
      char* end = nullptr;
      const double v = std::strtod(fields[i].c_str(), &end);
      if (end != fields[i].c_str() + fields[i].size())
        fail(ErrorCode::kSchemaError,
             "line " + std::to_string(line_no) + ": bad value '" + fields[i] + "'");
      row.cells.emplace_back(v);
    }
    report.rows.push_back(std::move(row));
  }
  if (!header) fail(ErrorCode::kSchemaError, "report has no header");
  return report;
}

std::string render_mushra(const MushraReport& report, ReportFormat format) {
  std::ostringstream out;
  const bool csv = format == ReportFormat::kCsv;
  if (csv)
    out << "system,n,mean,ci_low,ci_high,half_width,p_value,significant,method\n";
  else
    out << "| system | n | mean | 95% CI | p vs " << report.reference
        << " | significant | method |\n|---|---:|---:|---|---:|---|---|\n";
  for (const auto& s : report.summaries) {
    const auto* sig = significance_for(report, s.system);
    const auto& ci = s.interval;
    const std::string p = sig ? format_value(sig->p_value) : kAbsent;
    const std::string flag = sig ? (sig->significant ? "yes" : "no") : kAbsent;
    const std::string method = sig ? method_name(sig->method) : kAbsent;
    if (csv) {
      out << s.system << ',' << ci.n << ',' << format_value(ci.mean) << ','
          << format_value(ci.lower()) << ',' << format_value(ci.upper()) << ','
          << format_value(ci.half_width) << ',' << p << ',' << flag << ',' << method << '\n';
    } else {
      out << "| " << s.system << " | " << ci.n << " | " << format_value(ci.mean) << " | "
          << format_value(ci.mean) << " \xC2\xB1 " << format_value(ci.half_width) << " | " << p
          << " | " << flag << " | " << method << " |\n";
    }
  }
  if (!report.significance.empty()) {
    const double alpha = report.significance.front().alpha;
    if (csv)
      out << "# reference = " << report.reference << "\n# alpha = " << format_value(alpha) << '\n';
    else
      out << "\nReference: " << report.reference << ", alpha " << format_value(alpha)
          << ", two-sided Wilcoxon rank-sum.\n";
  }
  return out.str();
}

}  // namespace rvqlab::evalstats
