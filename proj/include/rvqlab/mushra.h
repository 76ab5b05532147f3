#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rvqlab/stats.h"

namespace rvqlab::evalstats {

struct MushraRecord {
  std::string subject;
  std::string stimulus;
  std::string system;
  double score = 0.0;  // [0, 100]
};

struct SystemSummary {
  std::string system;
  ConfidenceInterval interval;
};

// Delimited text with a header naming the columns subject, stimulus, system
// and score in any order. Tab-separated when the header contains a tab,
// comma-separated otherwise. SchemaError for malformed rows, InvalidInput for
// out-of-range scores or a repeated (subject, stimulus, system) triple.
std::vector<MushraRecord> parse_mushra(std::string_view text);
std::vector<MushraRecord> load_mushra(const std::filesystem::path& path);

// Checks score ranges and uniqueness.
void validate_records(const std::vector<MushraRecord>& records);

// Systems in order of first appearance.
std::vector<std::string> system_labels(const std::vector<MushraRecord>& records);
std::vector<double> scores_for(const std::vector<MushraRecord>& records, std::string_view system);

// Mean and two-sided t-interval per system, first-appearance order.
std::vector<SystemSummary> mushra_summary(const std::vector<MushraRecord>& records,
                                          double level = 0.95);

// Unpaired rank-sum test of every other system against `reference`.
// InvalidInput when the reference label is absent.
std::vector<SignificanceResult> compare_to_reference(const std::vector<MushraRecord>& records,
                                                     std::string_view reference,
                                                     double alpha = 0.05);

}  // namespace rvqlab::evalstats
