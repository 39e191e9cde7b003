#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace ivrand::stats {

double mean(std::span<const double> v);

// Sample variance with divisor n (not n-1), computed from centered deviations.
double variance_n(std::span<const double> v);

// Two-sided tail probability of a Student-t statistic with df degrees of freedom.
double student_t_two_sided_p(double t, double df);

// Standard normal CDF.
double normal_cdf(double z);

// Two-sided Fisher exact test on the 2x2 table
//   [[a, b], [c, d]]  (rows: z = 0/1, cols: x = 0/1).
// Two-sided p sums the probabilities of all tables at least as extreme
// (probability <= observed, with a small relative slack for ties).
double fisher_exact_two_sided(long a, long b, long c, long d);

// Quantile with linear interpolation between order statistics (type 7).
// `sorted` must be ascending.
double quantile_sorted(std::span<const double> sorted, double p);

// Pool-adjacent-violators: least-squares non-increasing fit, equal weights.
std::vector<double> pava_non_increasing(std::span<const double> v);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace ivrand::stats
