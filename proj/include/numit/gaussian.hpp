#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include <Eigen/Dense>

namespace numit {

/// Sorted, duplicate-free indices into a joint covariance.
class IndexSet {
 public:
  IndexSet() = default;
  /// Sorts its input; throws InvalidArgument on duplicates.
  explicit IndexSet(std::vector<std::size_t> indices);
  IndexSet(std::initializer_list<std::size_t> indices)
      : IndexSet(std::vector<std::size_t>(indices)) {}

  /// {first, first + 1, ..., first + count - 1}
  static IndexSet range(std::size_t first, std::size_t count);

  const std::vector<std::size_t>& indices() const noexcept { return indices_; }
  std::size_t size() const noexcept { return indices_.size(); }
  bool empty() const noexcept { return indices_.empty(); }
  std::size_t max() const { return indices_.back(); }

  bool intersects(const IndexSet& other) const;
  IndexSet merged(const IndexSet& other) const;

  friend bool operator==(const IndexSet&, const IndexSet&) = default;

 private:
  std::vector<std::size_t> indices_;
};

/// Symmetric positive-definite matrix with its Cholesky factor.
///
/// Construction validates symmetry (1e-12 relative to the largest entry) and
/// factorises. A failed factorisation is retried once with
/// 1e-10 * trace / d added to the diagonal of the factored copy; a second
/// failure throws CholeskyFailure. The stored entries are never modified.
class CovMatrix {
 public:
  explicit CovMatrix(Eigen::MatrixXd entries);

  Eigen::Index dim() const noexcept { return entries_.rows(); }
  const Eigen::MatrixXd& entries() const noexcept { return entries_; }
  const Eigen::MatrixXd& chol() const noexcept { return chol_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

  /// log|m| = 2 * sum(log diag(chol)).
  double logdet() const noexcept;

  /// Principal submatrix on `idx`.
  CovMatrix sub(const IndexSet& idx) const;

 private:
  Eigen::MatrixXd entries_;
  Eigen::MatrixXd chol_;
};

double spd_logdet(const CovMatrix& m) noexcept;

/// T = A S + sqrt(g) eps with S ~ N(0, sigma_s), eps ~ N(0, sigma_eps).
/// Sources split as X = first d_x coordinates of S, Y = the remaining d_y.
struct GaussianPidSystem {
  Eigen::MatrixXd a;
  CovMatrix sigma_s;
  CovMatrix sigma_eps;
  double g;
  std::size_t d_x;
  std::size_t d_y;

  /// Validates shapes, g > 0 and d_x + d_y = d_S.
  GaussianPidSystem(Eigen::MatrixXd a, CovMatrix sigma_s, CovMatrix sigma_eps, double g,
                    std::size_t d_x);

  std::size_t d_s() const noexcept { return d_x + d_y; }
  std::size_t d_t() const noexcept { return static_cast<std::size_t>(a.rows()); }

  GaussianPidSystem with_gain(double new_g) const;

  // Index sets into joint_covariance(): sources first, then targets.
  IndexSet x_indices() const { return IndexSet::range(0, d_x); }
  IndexSet y_indices() const { return IndexSet::range(d_x, d_y); }
  IndexSet source_indices() const { return IndexSet::range(0, d_s()); }
  IndexSet target_indices() const { return IndexSet::range(d_s(), d_t()); }
};

CovMatrix target_covariance(const GaussianPidSystem& sys);

/// [[sigma_s, sigma_s A^T], [A sigma_s, sigma_t]]
CovMatrix joint_covariance(const GaussianPidSystem& sys);

/// I(U;V) = 1/2 [log|S_U| + log|S_V| - log|S_{U+V}|] in nats. Values in
/// (-1e-9, 0) are clamped to zero, anything more negative throws
/// NegativeInformation.
double gaussian_mi(const CovMatrix& joint, const IndexSet& u, const IndexSet& v);

/// 1/2 log(|A sigma_s A^T + g sigma_eps| / |g sigma_eps|).
double system_tmi(const GaussianPidSystem& sys);

/// Eigenvalues of L^-1 (A sigma_s A^T) L^-T with sigma_eps = L L^T, i.e. the
/// per-direction signal-to-noise ratios at g = 1. Negative rounding residue
/// is clipped to zero.
Eigen::VectorXd snr_spectrum(const Eigen::MatrixXd& a, const CovMatrix& sigma_s,
                             const CovMatrix& sigma_eps);

/// 1/2 sum log(1 + lambda_i / g): the channel TMI evaluated from its spectrum.
/// Algebraically identical to system_tmi but stable for any g > 0.
double tmi_from_spectrum(const Eigen::VectorXd& spectrum, double g) noexcept;

}  // namespace numit
