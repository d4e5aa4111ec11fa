#include "numit/var.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "numit/error.hpp"
#include "numit/root_finding.hpp"

namespace numit {

namespace {

constexpr double kStabilityMargin = 1e-9;
constexpr double kNullGainCap = 1.0 - 1e-6;
constexpr Eigen::Index kKroneckerLimit = 40;

// Kronecker-vectorised solve of G = A G A^T + W, column-major vec:
// vec(A G A^T) = (A kron A) vec(G).
Eigen::MatrixXd lyapunov_kronecker(const Eigen::MatrixXd& a, const Eigen::MatrixXd& w) {
  const Eigen::Index d = a.rows();
  const Eigen::Index d2 = d * d;
  Eigen::MatrixXd k(d2, d2);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) k.block(i * d, j * d, d, d) = a(i, j) * a;
  k = Eigen::MatrixXd::Identity(d2, d2) - k;

  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(k);
  const Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(w.data(), d2);
  Eigen::VectorXd x = lu.solve(rhs);
  x += lu.solve(rhs - k * x);  // one refinement step
  Eigen::MatrixXd g = Eigen::Map<Eigen::MatrixXd>(x.data(), d, d);
  return 0.5 * (g + g.transpose());
}

// Doubling iteration: G_{k+1} = G_k + A_k G_k A_k^T, A_{k+1} = A_k^2.
Eigen::MatrixXd lyapunov_doubling(const Eigen::MatrixXd& a, const Eigen::MatrixXd& w) {
  Eigen::MatrixXd g = w;
  Eigen::MatrixXd ak = a;
  for (int it = 0; it < 100; ++it) {
    const Eigen::MatrixXd inc = ak * g * ak.transpose();
    g += inc;
    ak = (ak * ak).eval();
    if (inc.cwiseAbs().maxCoeff() <= 1e-17 * g.cwiseAbs().maxCoeff()) break;
  }
  return 0.5 * (g + g.transpose());
}

Eigen::MatrixXd lyapunov_unchecked(const Eigen::MatrixXd& a, const Eigen::MatrixXd& w) {
  return a.rows() <= kKroneckerLimit ? lyapunov_kronecker(a, w) : lyapunov_doubling(a, w);
}

void require_stable(const Eigen::MatrixXd& a) {
  const double rho = spectral_radius(a);
  if (!(rho < 1.0 - kStabilityMargin))
    throw Error(ErrorKind::UnstableSystem, "spectral radius " + std::to_string(rho) + " >= 1");
}

// Gamma_0 of the VAR(1) x_t = a x_{t-1} + eta with cov(eta) = v, no stability check.
Eigen::MatrixXd var1_gamma0(const Eigen::MatrixXd& a, const CovMatrix& v) {
  return lyapunov_unchecked(a, v.entries());
}

double tmi_from_gamma0(const Eigen::MatrixXd& gamma0, const CovMatrix& v) {
  return std::max(0.0, 0.5 * (CovMatrix(gamma0).logdet() - v.logdet()));
}

// Big companion-space covariance plus Gamma_0..Gamma_p.
struct Autocov {
  Eigen::MatrixXd big;
  std::vector<Eigen::MatrixXd> gammas;
};

Autocov companion_autocov(const VarModel& m, std::size_t k_max, bool checked) {
  const auto n = static_cast<Eigen::Index>(m.dim());
  const std::size_t p = m.order();
  const Eigen::MatrixXd comp = companion_matrix(m);
  if (checked) require_stable(comp);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(comp.rows(), comp.cols());
  w.topLeftCorner(n, n) = m.resid_cov().entries();

  Autocov out;
  out.big = lyapunov_unchecked(comp, w);
  const std::size_t upto = std::max(k_max, p);
  out.gammas.reserve(upto + 1);
  for (std::size_t k = 0; k < p; ++k)
    out.gammas.push_back(out.big.block(0, static_cast<Eigen::Index>(k) * n, n, n));
  for (std::size_t k = p; k <= upto; ++k) {
    Eigen::MatrixXd gk = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t l = 1; l <= p; ++l) gk += m.coeffs()[l - 1] * out.gammas[k - l];
    out.gammas.push_back(std::move(gk));
  }
  out.gammas[0] = 0.5 * (out.gammas[0] + out.gammas[0].transpose());
  return out;
}

}  // namespace

VarModel::VarModel(std::vector<Eigen::MatrixXd> coeffs, CovMatrix resid_cov)
    : coeffs_(std::move(coeffs)), resid_cov_(std::move(resid_cov)) {
  if (coeffs_.empty()) throw Error(ErrorKind::InvalidArgument, "VAR order must be >= 1");
  const Eigen::Index n = resid_cov_.dim();
  for (const auto& a : coeffs_) {
    if (a.rows() != n || a.cols() != n)
      throw Error(ErrorKind::DimensionMismatch, "VAR coefficient matrices must be n x n");
    if (!a.allFinite()) throw Error(ErrorKind::InvalidArgument, "VAR coefficients not finite");
  }
}

bool VarModel::is_stable() const {
  return spectral_radius(companion_matrix(*this)) < 1.0 - kStabilityMargin;
}

std::size_t TimeSeries::total_timepoints() const {
  std::size_t total = 0;
  for (const auto& e : epochs) total += static_cast<std::size_t>(e.rows());
  return total;
}

Partition::Partition(IndexSet x_vars, IndexSet y_vars, std::size_t n_vars)
    : x_(std::move(x_vars)), y_(std::move(y_vars)) {
  if (x_.empty() || y_.empty()) throw Error(ErrorKind::EmptyIndexSet, "partition halves must be non-empty");
  if (x_.intersects(y_)) throw Error(ErrorKind::OverlappingIndexSets, "partition halves overlap");
  if (x_.size() + y_.size() != n_vars || x_.merged(y_).max() != n_vars - 1)
    throw Error(ErrorKind::InvalidArgument, "partition must cover variables 0..n-1");
}

Eigen::MatrixXd companion_matrix(const VarModel& m) {
  const auto n = static_cast<Eigen::Index>(m.dim());
  const auto p = static_cast<Eigen::Index>(m.order());
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n * p, n * p);
  for (Eigen::Index l = 0; l < p; ++l) c.block(0, l * n, n, n) = m.coeffs()[static_cast<std::size_t>(l)];
  if (p > 1) c.block(n, 0, n * (p - 1), n * (p - 1)).setIdentity();
  return c;
}

double spectral_radius(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw Error(ErrorKind::DimensionMismatch, "spectral radius of a non-square matrix");
  if (a.size() == 0) return 0.0;
  if (!a.allFinite()) throw Error(ErrorKind::InvalidArgument, "matrix has non-finite entries");
  if (a.rows() == 1) return std::abs(a(0, 0));
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::InvalidArgument, "eigenvalue iteration failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

CovMatrix solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& w) {
  if (a.rows() != a.cols() || w.rows() != a.rows() || w.cols() != a.cols())
    throw Error(ErrorKind::DimensionMismatch, "Lyapunov operands must be square and equal-sized");
  require_stable(a);
  return CovMatrix(lyapunov_unchecked(a, w));
}

std::vector<Eigen::MatrixXd> autocov_sequence(const VarModel& m, std::size_t k_max) {
  Autocov ac = companion_autocov(m, k_max, true);
  ac.gammas.resize(k_max + 1);
  return ac.gammas;
}

TimeSeries simulate_var(const VarModel& m, std::size_t steps, std::size_t burn_in, Rng& rng,
                        std::size_t epochs) {
  if (steps < 1 || epochs < 1) throw Error(ErrorKind::InvalidArgument, "simulation needs steps >= 1");
  require_stable(companion_matrix(m));
  const auto n = static_cast<Eigen::Index>(m.dim());
  const std::size_t p = m.order();
  const Eigen::MatrixXd& l = m.resid_cov().chol();
  std::normal_distribution<double> normal(0.0, 1.0);

  TimeSeries ts;
  ts.n_vars = m.dim();
  for (std::size_t e = 0; e < epochs; ++e) {
    // history[0] is X_{t-1}, history[p-1] is X_{t-p}
    std::vector<Eigen::VectorXd> history(p, Eigen::VectorXd::Zero(n));
    Eigen::MatrixXd out(static_cast<Eigen::Index>(steps), n);
    Eigen::VectorXd z(n);
    for (std::size_t t = 0; t < burn_in + steps; ++t) {
      for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
      Eigen::VectorXd x = l * z;
      for (std::size_t k = 0; k < p; ++k) x.noalias() += m.coeffs()[k] * history[k];
      for (std::size_t k = p - 1; k > 0; --k) history[k] = history[k - 1];
      history[0] = x;
      if (t >= burn_in) out.row(static_cast<Eigen::Index>(t - burn_in)) = x.transpose();
    }
    ts.epochs.push_back(std::move(out));
  }
  return ts;
}

VarModel fit_var(const TimeSeries& ts, std::size_t p) {
  if (p < 1) throw Error(ErrorKind::InvalidArgument, "VAR order must be >= 1");
  if (ts.epochs.empty()) throw Error(ErrorKind::TooShortEpoch, "time series has no epochs");
  const auto n = static_cast<Eigen::Index>(ts.n_vars);
  const auto np = n * static_cast<Eigen::Index>(p);

  Eigen::MatrixXd zz = Eigen::MatrixXd::Zero(np, np);
  Eigen::MatrixXd yz = Eigen::MatrixXd::Zero(n, np);
  std::vector<Eigen::MatrixXd> centred;
  centred.reserve(ts.epochs.size());
  std::size_t rows = 0;
  for (const auto& epoch : ts.epochs) {
    if (epoch.cols() != n) throw Error(ErrorKind::DimensionMismatch, "epoch width differs from n_vars");
    if (epoch.rows() < static_cast<Eigen::Index>(p) + 2)
      throw Error(ErrorKind::TooShortEpoch, "epoch has " + std::to_string(epoch.rows()) +
                                                " timepoints; order " + std::to_string(p) + " needs " +
                                                std::to_string(p + 2));
    if (!epoch.allFinite()) throw Error(ErrorKind::InvalidArgument, "time series has non-finite values");
    Eigen::MatrixXd c = epoch.rowwise() - epoch.colwise().mean();
    Eigen::VectorXd z(np);
    for (Eigen::Index t = static_cast<Eigen::Index>(p); t < c.rows(); ++t) {
      for (Eigen::Index l = 0; l < static_cast<Eigen::Index>(p); ++l)
        z.segment(l * n, n) = c.row(t - 1 - l).transpose();
      zz.noalias() += z * z.transpose();
      yz.noalias() += c.row(t).transpose() * z.transpose();
      ++rows;
    }
    centred.push_back(std::move(c));
  }
  const auto dof = static_cast<Eigen::Index>(rows) - np;
  if (dof < 1) throw Error(ErrorKind::TooShortEpoch, "not enough timepoints for the regression");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(zz, Eigen::EigenvaluesOnly);
  const double top = eig.eigenvalues().maxCoeff();
  if (!(top > 0.0) || eig.eigenvalues().minCoeff() <= 1e-12 * top)
    throw Error(ErrorKind::RankDeficientRegressors, "lagged regressors are rank deficient");
  const Eigen::MatrixXd b = zz.ldlt().solve(yz.transpose()).transpose();  // n x np

  Eigen::MatrixXd ee = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd z(np);
  for (const auto& c : centred) {
    for (Eigen::Index t = static_cast<Eigen::Index>(p); t < c.rows(); ++t) {
      for (Eigen::Index l = 0; l < static_cast<Eigen::Index>(p); ++l)
        z.segment(l * n, n) = c.row(t - 1 - l).transpose();
      const Eigen::VectorXd e = c.row(t).transpose() - b * z;
      ee.noalias() += e * e.transpose();
    }
  }
  ee /= static_cast<double>(dof);

  std::vector<Eigen::MatrixXd> coeffs;
  for (std::size_t l = 0; l < p; ++l) coeffs.push_back(b.block(0, static_cast<Eigen::Index>(l) * n, n, n));
  try {
    return VarModel(std::move(coeffs), CovMatrix(0.5 * (ee + ee.transpose())));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::CholeskyFailure)
      throw Error(ErrorKind::RankDeficientRegressors, "residual covariance is singular");
    throw;
  }
}

double var_tmi(const VarModel& m) {
  const Autocov ac = companion_autocov(m, 0, true);
  return tmi_from_gamma0(ac.gammas[0], m.resid_cov());
}

CovMatrix var_past_future_covariance(const VarModel& m) {
  const auto n = static_cast<Eigen::Index>(m.dim());
  const auto p = static_cast<Eigen::Index>(m.order());
  const Autocov ac = companion_autocov(m, m.order(), true);
  Eigen::MatrixXd j(n * p + n, n * p + n);
  j.topLeftCorner(n * p, n * p) = ac.big;
  for (Eigen::Index l = 0; l < p; ++l) {
    // Cov(X_t, X_{t-1-l}) = Gamma_{l+1}
    const Eigen::MatrixXd& cross = ac.gammas[static_cast<std::size_t>(l + 1)];
    j.block(n * p, l * n, n, n) = cross;
    j.block(l * n, n * p, n, n) = cross.transpose();
  }
  j.bottomRightCorner(n, n) = ac.gammas[0];
  Eigen::MatrixXd sym = 0.5 * (j + j.transpose());
  return CovMatrix(std::move(sym));
}

PidAtoms var_pid(const VarModel& m, const Partition& part) {
  if (part.n_vars() != m.dim()) throw Error(ErrorKind::DimensionMismatch, "partition size differs from model");
  const std::size_t n = m.dim();
  const std::size_t p = m.order();
  const CovMatrix joint = var_past_future_covariance(m);

  auto lagged = [&](const IndexSet& vars) {
    std::vector<std::size_t> idx;
    for (std::size_t l = 0; l < p; ++l)
      for (auto v : vars.indices()) idx.push_back(l * n + v);
    return IndexSet(std::move(idx));
  };
  const IndexSet future = IndexSet::range(n * p, n);
  const double i_x = gaussian_mi(joint, lagged(part.x_vars()), future);
  const double i_y = gaussian_mi(joint, lagged(part.y_vars()), future);
  const double tmi = tmi_from_gamma0(joint.sub(future).entries(), m.resid_cov());
  return mmi_pid(i_x, i_y, tmi);
}

NullVarParams sample_null_var(std::size_t n, Rng& rng) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "VAR dimension must be >= 1");
  const auto d = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd a = standard_normal_matrix(d, d, rng);
  for (int attempt = 0;; ++attempt) {
    try {
      return {std::move(a), CovMatrix(sample_wishart_identity(d, static_cast<double>(d), rng))};
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::CholeskyFailure || attempt >= 10) throw;
    }
  }
}

VarModel rescaled_var1(const Eigen::MatrixXd& a_raw, const CovMatrix& v, double g) {
  const double rho = spectral_radius(a_raw);
  if (!(rho > 1e-12)) throw Error(ErrorKind::ZeroDynamics, "coefficient matrix has zero spectral radius");
  return VarModel({(g / rho) * a_raw}, v);
}

double solve_g_var(const Eigen::MatrixXd& a_raw, const CovMatrix& v, double target_tmi) {
  if (!(target_tmi > 0.0) || !std::isfinite(target_tmi))
    throw Error(ErrorKind::InvalidArgument, "target TMI must be positive and finite");
  if (a_raw.rows() != v.dim() || a_raw.cols() != v.dim())
    throw Error(ErrorKind::DimensionMismatch, "a_raw must match the residual covariance");
  const double rho = spectral_radius(a_raw);
  if (!(rho > 1e-12)) throw Error(ErrorKind::ZeroDynamics, "coefficient matrix has zero spectral radius");
  const Eigen::MatrixXd unit = a_raw / rho;
  auto tmi = [&](double g) { return tmi_from_gamma0(var1_gamma0(g * unit, v), v); };

  const double at_cap = tmi(kNullGainCap);
  if (target_tmi > at_cap + 1e-10)
    throw Error(ErrorKind::TargetUnreachable, "target TMI " + std::to_string(target_tmi) +
                                                  " exceeds " + std::to_string(at_cap) + " at the gain cap");
  const RootResult root =
      bisect([&](double g) { return tmi(g) - target_tmi; }, 0.0, kNullGainCap, 1e-10, 200, arithmetic_mid);
  if (!(std::abs(root.residual) < 1e-9) || !(root.x > 0.0))
    throw Error(ErrorKind::TargetUnreachable, "bisection on the spectral radius did not converge");
  return root.x;
}

NullEnsemble build_null_ensemble_var(double target_tmi, const Partition& part, std::size_t n,
                                     std::uint64_t seed, const EnsembleOptions& opts) {
  if (!(target_tmi > 0.0)) throw Error(ErrorKind::ZeroTmi, "null ensemble needs a positive target TMI");
  return run_ensemble(NullFamily::Var, target_tmi, n, seed, opts, [&](Rng& rng, std::size_t) {
    NullVarParams params = sample_null_var(part.n_vars(), rng);
    const double g = solve_g_var(params.a_raw, params.v, target_tmi);
    return var_pid(rescaled_var1(params.a_raw, params.v, g), part);
  });
}

NormalizedAtoms numit_normalize_var(const VarModel& m, const Partition& part, std::size_t n_samples,
                                    std::uint64_t seed, const EnsembleOptions& opts) {
  const PidAtoms observed = var_pid(m, part);
  if (!(observed.tmi >= 1e-12)) throw Error(ErrorKind::ZeroTmi, "model carries no temporal information");
  const NullEnsemble ens = build_null_ensemble_var(observed.tmi, part, n_samples, seed, opts);
  return quantiles_against(observed, ens, opts.tie_rule);
}

}  // namespace numit
