#include "numit/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "numit/error.hpp"

namespace numit {

IndexSet::IndexSet(std::vector<std::size_t> indices) : indices_(std::move(indices)) {
  std::sort(indices_.begin(), indices_.end());
  if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end())
    throw Error(ErrorKind::InvalidArgument, "IndexSet contains duplicate indices");
}

IndexSet IndexSet::range(std::size_t first, std::size_t count) {
  std::vector<std::size_t> idx(count);
  for (std::size_t i = 0; i < count; ++i) idx[i] = first + i;
  return IndexSet(std::move(idx));
}

bool IndexSet::intersects(const IndexSet& other) const {
  auto a = indices_.begin();
  auto b = other.indices_.begin();
  while (a != indices_.end() && b != other.indices_.end()) {
    if (*a == *b) return true;
    if (*a < *b) ++a; else ++b;
  }
  return false;
}

IndexSet IndexSet::merged(const IndexSet& other) const {
  std::vector<std::size_t> all;
  all.reserve(size() + other.size());
  std::set_union(indices_.begin(), indices_.end(), other.indices_.begin(), other.indices_.end(),
                 std::back_inserter(all));
  return IndexSet(std::move(all));
}

namespace {

bool try_cholesky(const Eigen::MatrixXd& m, Eigen::MatrixXd& out) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) return false;
  out = llt.matrixL();
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    if (!(out(i, i) > 0.0) || !std::isfinite(out(i, i))) return false;
  return true;
}

}  // namespace

CovMatrix::CovMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  const Eigen::Index d = entries_.rows();
  if (d < 1 || entries_.cols() != d)
    throw Error(ErrorKind::DimensionMismatch, "covariance must be a non-empty square matrix");
  if (!entries_.allFinite()) throw Error(ErrorKind::InvalidArgument, "covariance has non-finite entries");

  const double scale = entries_.cwiseAbs().maxCoeff();
  const double asym = (entries_ - entries_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) throw Error(ErrorKind::NotSymmetric, "covariance is not symmetric");

  if (try_cholesky(entries_, chol_)) return;
  const double jitter = 1e-10 * entries_.trace() / static_cast<double>(d);
  if (jitter > 0.0) {
    Eigen::MatrixXd nudged = entries_;
    nudged.diagonal().array() += jitter;
    if (try_cholesky(nudged, chol_)) return;
  }
  throw Error(ErrorKind::CholeskyFailure,
              "matrix of dimension " + std::to_string(d) + " is not positive definite");
}

double CovMatrix::logdet() const noexcept {
  return 2.0 * chol_.diagonal().array().log().sum();
}

CovMatrix CovMatrix::sub(const IndexSet& idx) const {
  if (idx.empty()) throw Error(ErrorKind::EmptyIndexSet, "empty index set");
  if (idx.max() >= static_cast<std::size_t>(dim()))
    throw Error(ErrorKind::IndexOutOfRange, "index " + std::to_string(idx.max()) + " outside joint");
  const auto& ix = idx.indices();
  const auto n = static_cast<Eigen::Index>(ix.size());
  Eigen::MatrixXd s(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      s(i, j) = entries_(static_cast<Eigen::Index>(ix[i]), static_cast<Eigen::Index>(ix[j]));
  return CovMatrix(std::move(s));
}

double spd_logdet(const CovMatrix& m) noexcept { return m.logdet(); }

GaussianPidSystem::GaussianPidSystem(Eigen::MatrixXd a_, CovMatrix sigma_s_, CovMatrix sigma_eps_,
                                     double g_, std::size_t d_x_)
    : a(std::move(a_)), sigma_s(std::move(sigma_s_)), sigma_eps(std::move(sigma_eps_)), g(g_),
      d_x(d_x_), d_y(0) {
  if (!(g > 0.0) || !std::isfinite(g)) throw Error(ErrorKind::InvalidArgument, "noise gain g must be positive");
  const auto ds = static_cast<std::size_t>(sigma_s.dim());
  if (a.cols() != sigma_s.dim() || a.rows() != sigma_eps.dim() || a.rows() < 1)
    throw Error(ErrorKind::DimensionMismatch, "A must be d_T x d_S matching the covariances");
  if (!a.allFinite()) throw Error(ErrorKind::InvalidArgument, "A has non-finite entries");
  if (d_x < 1 || d_x >= ds)
    throw Error(ErrorKind::DimensionMismatch, "source split needs d_x >= 1 and d_y >= 1");
  d_y = ds - d_x;
}

GaussianPidSystem GaussianPidSystem::with_gain(double new_g) const {
  return GaussianPidSystem(a, sigma_s, sigma_eps, new_g, d_x);
}

CovMatrix target_covariance(const GaussianPidSystem& sys) {
  Eigen::MatrixXd t = sys.a * sys.sigma_s.entries() * sys.a.transpose() + sys.g * sys.sigma_eps.entries();
  return CovMatrix(0.5 * (t + t.transpose()));
}

CovMatrix joint_covariance(const GaussianPidSystem& sys) {
  const auto ds = static_cast<Eigen::Index>(sys.d_s());
  const auto dt = static_cast<Eigen::Index>(sys.d_t());
  const Eigen::MatrixXd cross = sys.a * sys.sigma_s.entries();  // Cov(T, S)
  Eigen::MatrixXd j(ds + dt, ds + dt);
  j.topLeftCorner(ds, ds) = sys.sigma_s.entries();
  j.bottomLeftCorner(dt, ds) = cross;
  j.topRightCorner(ds, dt) = cross.transpose();
  j.bottomRightCorner(dt, dt) = target_covariance(sys).entries();
  return CovMatrix(std::move(j));
}

double gaussian_mi(const CovMatrix& joint, const IndexSet& u, const IndexSet& v) {
  if (u.empty() || v.empty()) throw Error(ErrorKind::EmptyIndexSet, "mutual information needs non-empty sets");
  if (u.intersects(v)) throw Error(ErrorKind::OverlappingIndexSets, "index sets overlap");
  const double mi =
      0.5 * (joint.sub(u).logdet() + joint.sub(v).logdet() - joint.sub(u.merged(v)).logdet());
  if (mi >= 0.0) return mi;
  if (mi > -1e-9) return 0.0;
  throw Error(ErrorKind::NegativeInformation, "mutual information " + std::to_string(mi) + " < 0");
}

double system_tmi(const GaussianPidSystem& sys) {
  const double dt = static_cast<double>(sys.d_t());
  const double value =
      0.5 * (target_covariance(sys).logdet() - dt * std::log(sys.g) - sys.sigma_eps.logdet());
  return std::max(value, 0.0);
}

Eigen::VectorXd snr_spectrum(const Eigen::MatrixXd& a, const CovMatrix& sigma_s,
                             const CovMatrix& sigma_eps) {
  const Eigen::MatrixXd signal = a * sigma_s.entries() * a.transpose();
  const auto l = sigma_eps.chol().triangularView<Eigen::Lower>();
  Eigen::MatrixXd whitened = l.solve(signal);
  whitened = l.solve(whitened.transpose()).eval();
  whitened = 0.5 * (whitened + whitened.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(whitened, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseMax(0.0);
}

double tmi_from_spectrum(const Eigen::VectorXd& spectrum, double g) noexcept {
  double sum = 0.0;
  for (double lambda : spectrum) sum += std::log1p(lambda / g);
  return 0.5 * sum;
}

}  // namespace numit
