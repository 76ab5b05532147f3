#pragma once

#include <vector>

namespace oracle {

// Two-sided exact rank-sum p by enumerating every way to choose |a| of the
// pooled positions. Mid-ranks come from pairwise counting. Small inputs only.
double ranksum_exact_bruteforce(const std::vector<double>& a, const std::vector<double>& b);

// Textbook normal approximation with tie correction and a 0.5 continuity
// correction, evaluated with std::erfc.
double ranksum_normal(const std::vector<double>& a, const std::vector<double>& b);

// Student-t quantile by bisection on a numerically integrated density.
double student_t_quantile(double p, double dof);

}  // namespace oracle
