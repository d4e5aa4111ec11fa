#include "numit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "numit/error.hpp"

namespace numit {

namespace {

// Lentz's method for the continued fraction of I_x(a, b).
double beta_continued_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h;
}

std::vector<double> standardized(std::span<const double> v, double mu, double sd) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - mu) / sd;
  return out;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error(ErrorKind::InvalidArgument, "beta parameters must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double dof) {
  if (!(dof > 0.0)) throw Error(ErrorKind::InvalidArgument, "degrees of freedom must be positive");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double tail = 0.5 * incomplete_beta(0.5 * dof, 0.5, dof / (dof + t * t));
  return t > 0.0 ? 1.0 - tail : tail;
}

double student_t_two_sided_p(double t, double dof) {
  if (std::isinf(t)) return 0.0;
  return std::min(1.0, incomplete_beta(0.5 * dof, 0.5, dof / (dof + t * t)));
}

double mean(std::span<const double> v) {
  if (v.empty()) throw Error(ErrorKind::TooFewSamples, "mean of an empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std(std::span<const double> v) {
  if (v.size() < 2) throw Error(ErrorKind::TooFewSamples, "standard deviation needs >= 2 values");
  const double mu = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::LengthMismatch, "Pearson inputs differ in length");
  if (a.size() < 2) throw Error(ErrorKind::TooFewSamples, "Pearson needs >= 2 pairs");
  const double ma = mean(a);
  const double mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) throw Error(ErrorKind::DegenerateDesign, "zero-variance input to Pearson");
  return sab / std::sqrt(saa * sbb);
}

double ks_uniform(std::vector<double> sample) {
  if (sample.empty()) throw Error(ErrorKind::TooFewSamples, "KS statistic of an empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double u = std::clamp(sample[i], 0.0, 1.0);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - u, u - static_cast<double>(i) / n});
  }
  return d;
}

SummaryStats summary_stats(std::span<const double> values) {
  if (values.size() < 2) throw Error(ErrorKind::TooFewSamples, "t-test needs >= 2 values");
  for (double x : values)
    if (!std::isfinite(x)) throw Error(ErrorKind::InvalidArgument, "t-test input is not finite");
  SummaryStats s;
  s.mean = mean(values);
  s.std = sample_std(values);
  const double n = static_cast<double>(values.size());
  if (s.std == 0.0) {
    if (s.mean == 0.0) {
      s.t = 0.0;
      s.p = 1.0;
    } else {
      s.t = std::copysign(std::numeric_limits<double>::infinity(), s.mean);
      s.p = 0.0;
    }
    return s;
  }
  s.t = s.mean / (s.std / std::sqrt(n));
  s.p = student_t_two_sided_p(s.t, n - 1.0);
  return s;
}

RegressionFit interaction_regression(std::span<const double> x_nmi, std::span<const double> x_numit,
                                     std::span<const double> y_nmi, std::span<const double> y_numit,
                                     Standardization mode) {
  const std::size_t n = x_nmi.size();
  if (x_numit.size() != n || y_nmi.size() != n || y_numit.size() != n)
    throw Error(ErrorKind::LengthMismatch, "regression series differ in length");
  if (n < 4) throw Error(ErrorKind::DegenerateDesign, "regression needs at least 4 paired points per group");

  std::array<std::vector<double>, 4> cols;  // x0, x1, y0, y1 after standardisation
  const std::array<std::span<const double>, 4> raw{x_nmi, x_numit, y_nmi, y_numit};
  if (mode == Standardization::PerGroup) {
    for (std::size_t k = 0; k < 4; ++k) {
      const double sd = sample_std(raw[k]);
      if (!(sd > 0.0)) throw Error(ErrorKind::DegenerateDesign, "zero-variance series in regression");
      cols[k] = standardized(raw[k], mean(raw[k]), sd);
    }
  } else {
    for (std::size_t k = 0; k < 4; k += 2) {
      std::vector<double> pooled(raw[k].begin(), raw[k].end());
      pooled.insert(pooled.end(), raw[k + 1].begin(), raw[k + 1].end());
      const double mu = mean(pooled);
      const double sd = sample_std(pooled);
      if (!(sd > 0.0)) throw Error(ErrorKind::DegenerateDesign, "zero-variance series in regression");
      cols[k] = standardized(raw[k], mu, sd);
      cols[k + 1] = standardized(raw[k + 1], mu, sd);
    }
  }

  const auto rows = static_cast<Eigen::Index>(2 * n);
  Eigen::MatrixXd design(rows, 4);
  Eigen::VectorXd y(rows);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r0 = static_cast<Eigen::Index>(i);
    const auto r1 = static_cast<Eigen::Index>(n + i);
    design.row(r0) << 1.0, cols[0][i], 0.0, 0.0;
    design.row(r1) << 1.0, cols[1][i], 1.0, cols[1][i];
    y(r0) = cols[2][i];
    y(r1) = cols[3][i];
  }

  const Eigen::MatrixXd xtx = design.transpose() * design;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 1e-12 * ldlt.vectorD().maxCoeff()))
    throw Error(ErrorKind::DegenerateDesign, "regression design is singular");
  const Eigen::VectorXd beta = ldlt.solve(design.transpose() * y);
  const Eigen::VectorXd resid = y - design * beta;
  const double dof = static_cast<double>(rows - 4);
  const double sigma2 = resid.squaredNorm() / dof;
  const Eigen::MatrixXd cov = sigma2 * ldlt.solve(Eigen::MatrixXd::Identity(4, 4));

  RegressionFit fit;
  fit.n = n;
  for (Eigen::Index k = 0; k < 4; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    fit.beta[ku] = beta(k);
    fit.std_err[ku] = std::sqrt(std::max(cov(k, k), 0.0));
    if (fit.std_err[ku] > 0.0) {
      fit.p_values[ku] = student_t_two_sided_p(beta(k) / fit.std_err[ku], dof);
    } else {
      fit.p_values[ku] = beta(k) == 0.0 ? 1.0 : 0.0;
    }
  }
  fit.r_nmi = pearson(x_nmi, y_nmi);
  fit.r_numit = pearson(x_numit, y_numit);
  return fit;
}

}  // namespace numit
