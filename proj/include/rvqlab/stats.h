#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace rvqlab::evalstats {

enum class RankSumMethod { kAuto, kExact, kNormal };

struct SignificanceResult {
  std::string system;
  double p_value = 1.0;
  double alpha = 0.05;
  bool significant = false;  // p < alpha
  RankSumMethod method = RankSumMethod::kExact;
  double statistic = 0.0;  // rank sum of the first sample (mid-ranks)
};

inline constexpr std::size_t kExactThreshold = 10;

// Two-sided Wilcoxon rank-sum (Mann-Whitney) test with mid-ranks for ties.
// kAuto enumerates the exact null distribution when min(n_a, n_b) <= 10 and
// otherwise uses the tie-corrected normal approximation with continuity
// correction. InvalidInput for an empty sample or non-finite scores.
SignificanceResult wilcoxon_ranksum(std::span<const double> a, std::span<const double> b,
                                    double alpha = 0.05,
                                    RankSumMethod method = RankSumMethod::kAuto);

bool significant(double p_value, double alpha);
const char* method_name(RankSumMethod method);

struct ConfidenceInterval {
  std::size_t n = 0;
  double mean = 0.0;
  double stddev = 0.0;      // sample standard deviation
  double half_width = 0.0;  // t_{1-(1-level)/2, n-1} * s / sqrt(n)
  double level = 0.95;

  double lower() const noexcept { return mean - half_width; }
  double upper() const noexcept { return mean + half_width; }
};

// Two-sided Student-t interval; InsufficientData when fewer than 2 values.
ConfidenceInterval t_interval(std::span<const double> values, double level = 0.95);

}  // namespace rvqlab::evalstats
