#pragma once

#include <cstddef>
#include <vector>

namespace vf {

double mean(const std::vector<double>& xs);
double sample_sd(const std::vector<double>& xs);  // n-1 denominator

// Regularized incomplete gamma P(a, x) and the chi-square survival function.
double gamma_p(double a, double x);
double chi2_sf(double x, double df);

// Regularized incomplete beta I_x(a, b).
double beta_inc(double a, double b, double x);

// Student-t CDF and upper-tail quantile: t such that P(T_df <= t) = p.
double student_t_cdf(double t, double df);
double student_t_quantile(double p, double df);

// Pearson chi-square goodness-of-fit p-value of observed counts against
// expected probabilities (sums normalized; df = bins - 1).
double chi2_gof_pvalue(const std::vector<double>& observed,
                       const std::vector<double>& expected_probs);

}  // namespace vf
