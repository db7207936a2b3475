#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace bohmsim {

double mean(std::span<const double> xs);

// Population variance (1/N normalization).
double variance(std::span<const double> xs);

// Standard error of the mean, sqrt(var/(N-1))-style (sample variance).
double standard_error(std::span<const double> xs);

// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

// Chi-square survival function: P(X > x) for k degrees of freedom.
double chi_square_sf(double x, int dof);

// Pearson chi-square statistic of observed counts against expected counts.
// Bins with expected < min_expected are merged into their right neighbor
// (last bin merges left).  Returns the p-value; dof = merged bins - 1.
double chi_square_test(std::span<const double> observed,
                       std::span<const double> expected,
                       double min_expected = 5.0);

// One-sample Kolmogorov–Smirnov statistic sup|F_n - F| against a CDF.
// Samples need not be sorted.
double ks_statistic(std::vector<double> samples,
                    const std::function<double(double)>& cdf);

// Standard normal CDF.
double normal_cdf(double x);

}  // namespace bohmsim
