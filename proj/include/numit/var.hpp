#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "numit/gaussian.hpp"
#include "numit/null_model.hpp"
#include "numit/pid.hpp"
#include "numit/random.hpp"

namespace numit {

/// X_t = sum_{l=1..p} A_l X_{t-l} + eta_t,  eta_t ~ N(0, V).
///
/// Stability is not enforced here: fitted models are validated by the
/// operations that need a stationary process (they throw UnstableSystem).
class VarModel {
 public:
  VarModel(std::vector<Eigen::MatrixXd> coeffs, CovMatrix resid_cov);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(resid_cov_.dim()); }
  std::size_t order() const noexcept { return coeffs_.size(); }
  const std::vector<Eigen::MatrixXd>& coeffs() const noexcept { return coeffs_; }
  const CovMatrix& resid_cov() const noexcept { return resid_cov_; }

  VarModel with_resid_cov(CovMatrix v) const { return VarModel(coeffs_, std::move(v)); }

  /// Companion spectral radius < 1 - 1e-9.
  bool is_stable() const;

 private:
  std::vector<Eigen::MatrixXd> coeffs_;
  CovMatrix resid_cov_;
};

/// Multi-epoch multivariate series; each epoch is timepoints x n_vars.
struct TimeSeries {
  std::size_t n_vars = 0;
  std::vector<Eigen::MatrixXd> epochs;
  std::optional<double> sample_rate;

  std::size_t total_timepoints() const;
};

/// Disjoint, non-empty split of the variables 0..n-1 into sources X and Y.
class Partition {
 public:
  Partition(IndexSet x_vars, IndexSet y_vars, std::size_t n_vars);

  const IndexSet& x_vars() const noexcept { return x_; }
  const IndexSet& y_vars() const noexcept { return y_; }
  std::size_t n_vars() const noexcept { return x_.size() + y_.size(); }

 private:
  IndexSet x_;
  IndexSet y_;
};

/// np x np block companion matrix: top block row A_1..A_p, identity blocks
/// on the first sub-diagonal.
Eigen::MatrixXd companion_matrix(const VarModel& m);

/// Max |eigenvalue|.
double spectral_radius(const Eigen::MatrixXd& a);

/// Solves G = A G A^T + W. Up to dimension 40 the Kronecker-vectorised linear
/// system is solved directly; larger systems use the doubling iteration.
/// Throws UnstableSystem when the spectral radius of `a` is >= 1 - 1e-9.
CovMatrix solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& w);

/// [Gamma_0, ..., Gamma_kmax] with Gamma_k = E[X_t X_{t-k}^T]. Lags below p
/// come from the companion-form Lyapunov solution, later lags from the
/// Yule-Walker recursion.
std::vector<Eigen::MatrixXd> autocov_sequence(const VarModel& m, std::size_t k_max);

/// `epochs` independent realisations, each `steps` long after discarding
/// `burn_in` steps started from zero.
TimeSeries simulate_var(const VarModel& m, std::size_t steps, std::size_t burn_in, Rng& rng,
                        std::size_t epochs = 1);

/// Pooled least squares over lag-stacked regressors, each epoch demeaned on
/// its own and never regressed across an epoch boundary. V uses the
/// denominator T_eff - n p.
VarModel fit_var(const TimeSeries& ts, std::size_t p);

/// I(past; future) = 1/2 log|Gamma_0| - 1/2 log|V|.
double var_tmi(const VarModel& m);

/// Joint covariance of (stacked past state X_{t-1..t-p}, future X_t). The
/// past block is ordered lag-major: index l * n + v is variable v at lag l+1.
CovMatrix var_past_future_covariance(const VarModel& m);

/// PID with the partition's variables (all their lags) as sources and the
/// full future state as target.
PidAtoms var_pid(const VarModel& m, const Partition& part);

struct NullVarParams {
  Eigen::MatrixXd a_raw;
  CovMatrix v;
};

/// a_raw ~ N(0,1) entrywise, V ~ W_n(I, n).
NullVarParams sample_null_var(std::size_t n, Rng& rng);

/// Spectral radius g in (0, 1 - 1e-6) such that the VAR(1) with
/// A = (g / rho(a_raw)) a_raw and residual covariance v reaches `target_tmi`.
double solve_g_var(const Eigen::MatrixXd& a_raw, const CovMatrix& v, double target_tmi);

/// VAR(1) model with coefficients rescaled to spectral radius g.
VarModel rescaled_var1(const Eigen::MatrixXd& a_raw, const CovMatrix& v, double g);

NullEnsemble build_null_ensemble_var(double target_tmi, const Partition& part, std::size_t n,
                                     std::uint64_t seed, const EnsembleOptions& opts = {});

NormalizedAtoms numit_normalize_var(const VarModel& m, const Partition& part, std::size_t n_samples,
                                    std::uint64_t seed, const EnsembleOptions& opts = {});

}  // namespace numit
