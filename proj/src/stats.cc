#include "rvqlab/stats.h"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>
#include <string>

#include "rvqlab/error.h"

namespace rvqlab::evalstats {
namespace {

struct Ranking {
  std::vector<double> ranks;  // mid-ranks, pooled order (a then b)
  double tie_term = 0.0;      // sum of t^3 - t over tie groups
};

Ranking mid_ranks(std::span<const double> a, std::span<const double> b) {
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::vector<std::size_t> order(pooled.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return pooled[x] < pooled[y]; });
  Ranking r;
  r.ranks.resize(pooled.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r.ranks[order[k]] = rank;
    const double t = static_cast<double>(j - i + 1);
    r.tie_term += t * t * t - t;
    i = j + 1;
  }
  return r;
}

// Null distribution of the doubled rank sum of a size-k subset drawn from
// the pooled doubled ranks, as probabilities indexed by sum.
std::vector<long double> subset_sum_distribution(const std::vector<long>& doubled, std::size_t k) {
  const long total = std::accumulate(doubled.begin(), doubled.end(), 0L);
  const auto width = static_cast<std::size_t>(total + 1);
  // ways[j][s]: number of j-subsets with doubled sum s.
  std::vector<std::vector<long double>> ways(k + 1, std::vector<long double>(width, 0.0L));
  ways[0][0] = 1.0L;
  std::size_t seen = 0;
  for (long v : doubled) {
    ++seen;
    for (std::size_t j = std::min(k, seen); j >= 1; --j)
      for (std::size_t s = width; s-- > static_cast<std::size_t>(v);)
        ways[j][s] += ways[j - 1][s - static_cast<std::size_t>(v)];
  }
  long double count = 0.0L;
  for (auto w : ways[k]) count += w;
  for (auto& w : ways[k]) w /= count;
  return std::move(ways[k]);
}

double exact_p(const Ranking& r, std::size_t n_a) {
  const std::size_t n = r.ranks.size();
  const bool first_smaller = n_a <= n - n_a;
  const std::size_t k = first_smaller ? n_a : n - n_a;
  std::vector<long> doubled(n);
  for (std::size_t i = 0; i < n; ++i) doubled[i] = std::lround(2.0 * r.ranks[i]);
  long observed = 0;
  for (std::size_t i = 0; i < n; ++i)
    if ((i < n_a) == first_smaller) observed += doubled[i];
  const auto dist = subset_sum_distribution(doubled, k);
  long double lower = 0.0L, upper = 0.0L;
  for (std::size_t s = 0; s < dist.size(); ++s) {
    if (static_cast<long>(s) <= observed) lower += dist[s];
    if (static_cast<long>(s) >= observed) upper += dist[s];
  }
  return static_cast<double>(std::min(1.0L, 2.0L * std::min(lower, upper)));
}

double normal_p(const Ranking& r, std::size_t n_a, double w) {
  const double n = static_cast<double>(r.ranks.size());
  const double na = static_cast<double>(n_a);
  const double nb = n - na;
  const double mean = na * (n + 1.0) / 2.0;
  const double var = na * nb / 12.0 * ((n + 1.0) - r.tie_term / (n * (n - 1.0)));
  if (!(var > 0)) return 1.0;
  const double z = std::max(0.0, std::abs(w - mean) - 0.5) / std::sqrt(var);
  const boost::math::normal normal;
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(normal, z)));
}

}  // namespace

bool significant(double p_value, double alpha) { return p_value < alpha; }

const char* method_name(RankSumMethod method) {
  switch (method) {
    case RankSumMethod::kExact:
      return "exact";
    case RankSumMethod::kNormal:
      return "normal-approx";
    default:
      return "auto";
  }
}

SignificanceResult wilcoxon_ranksum(std::span<const double> a, std::span<const double> b,
                                    double alpha, RankSumMethod method) {
  if (a.empty() || b.empty()) fail(ErrorCode::kInvalidInput, "rank-sum test needs two nonempty samples");
  for (auto s : {a, b})
    for (double v : s)
      if (!std::isfinite(v)) fail(ErrorCode::kInvalidInput, "non-finite score");
  if (!(alpha > 0 && alpha < 1)) fail(ErrorCode::kInvalidInput, "alpha must be in (0, 1)");

  const auto r = mid_ranks(a, b);
  double w = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) w += r.ranks[i];
  if (method == RankSumMethod::kAuto)
    method = std::min(a.size(), b.size()) <= kExactThreshold ? RankSumMethod::kExact
                                                             : RankSumMethod::kNormal;
  SignificanceResult out;
  out.alpha = alpha;
  out.method = method;
  out.statistic = w;
  out.p_value = method == RankSumMethod::kExact ? exact_p(r, a.size()) : normal_p(r, a.size(), w);
  out.significant = significant(out.p_value, alpha);
  return out;
}

ConfidenceInterval t_interval(std::span<const double> values, double level) {
  if (values.size() < 2)
    fail(ErrorCode::kInsufficientData, "confidence interval needs at least 2 scores, got " +
                                           std::to_string(values.size()));
  if (!(level > 0 && level < 1)) fail(ErrorCode::kInvalidInput, "level must be in (0, 1)");
  ConfidenceInterval ci;
  ci.n = values.size();
  ci.level = level;
  const double n = static_cast<double>(ci.n);
  ci.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - ci.mean) * (v - ci.mean);
  ci.stddev = std::sqrt(ss / (n - 1.0));
  const boost::math::students_t dist(n - 1.0);
  const double t = boost::math::quantile(dist, 1.0 - (1.0 - level) / 2.0);
  ci.half_width = t * ci.stddev / std::sqrt(n);
  return ci;
}

}  // namespace rvqlab::evalstats
