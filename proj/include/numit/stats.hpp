#pragma once

#include <array>
#include <span>
#include <vector>

namespace numit {

/// Regularised incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

/// CDF of Student's t with `dof` degrees of freedom.
double student_t_cdf(double t, double dof);

/// Two-sided p-value of a t statistic.
double student_t_two_sided_p(double t, double dof);

double mean(std::span<const double> v);

/// Sample standard deviation (n - 1 denominator).
double sample_std(std::span<const double> v);

/// Throws DegenerateDesign when either vector has zero variance and
/// LengthMismatch when lengths differ.
double pearson(std::span<const double> a, std::span<const double> b);

/// Kolmogorov-Smirnov distance of a sample from Uniform(0, 1).
double ks_uniform(std::vector<double> sample);

struct SummaryStats {
  double mean = 0.0;
  double std = 0.0;
  double t = 0.0;
  double p = 1.0;
};

/// One-sample t-test against zero mean. Degenerate samples follow fixed
/// conventions: all-zero gives t = 0, p = 1; zero variance with a nonzero
/// mean gives t = +-inf, p = 0.
SummaryStats summary_stats(std::span<const double> values);

enum class Standardization { PerGroup, Global };

/// y = b0 + b1 x + b2 m + b3 x m over the stacked groups m = 0 (first pair)
/// and m = 1 (second pair).
struct RegressionFit {
  std::array<double, 4> beta{};
  std::array<double, 4> std_err{};
  std::array<double, 4> p_values{};
  double r_nmi = 0.0;    ///< Pearson r of the m = 0 pair
  double r_numit = 0.0;  ///< Pearson r of the m = 1 pair
  std::size_t n = 0;     ///< rows per group
};

/// `x_*` are the predictor atom series (one per normalisation), `y_*` the
/// response series. All four must have equal length >= 4.
RegressionFit interaction_regression(std::span<const double> x_nmi, std::span<const double> x_numit,
                                     std::span<const double> y_nmi, std::span<const double> y_numit,
                                     Standardization mode = Standardization::PerGroup);

}  // namespace numit
