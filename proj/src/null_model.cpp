#include "numit/null_model.hpp"

#include <cmath>
#include <limits>

#include "numit/root_finding.hpp"

namespace numit {

std::string_view to_string(NullFamily family) noexcept {
  switch (family) {
    case NullFamily::Gaussian: return "gaussian";
    case NullFamily::Var: return "var";
    case NullFamily::Discrete: return "discrete";
  }
  return "unknown";
}

double quantile_of(double value, std::span<const double> nulls, TieRule rule) {
  if (nulls.empty()) throw Error(ErrorKind::EmptyEnsemble, "quantile of an empty null distribution");
  std::size_t below = 0;
  std::size_t equal = 0;
  for (double x : nulls) {
    if (x < value) ++below;
    else if (x == value) ++equal;
  }
  double rank = static_cast<double>(below);
  if (rule == TieRule::Midpoint) rank += 0.5 * static_cast<double>(equal);
  return rank / static_cast<double>(nulls.size());
}

NormalizedAtoms quantiles_against(const PidAtoms& observed, const NullEnsemble& ensemble, TieRule rule) {
  const std::size_t n = ensemble.samples.size();
  std::vector<double> red(n), unx(n), uny(n), syn(n);
  for (std::size_t i = 0; i < n; ++i) {
    red[i] = ensemble.samples[i].red;
    unx[i] = ensemble.samples[i].un_x;
    uny[i] = ensemble.samples[i].un_y;
    syn[i] = ensemble.samples[i].syn;
  }
  NormalizedAtoms q;
  q.red_q = quantile_of(observed.red, red, rule);
  q.unx_q = quantile_of(observed.un_x, unx, rule);
  q.uny_q = quantile_of(observed.un_y, uny, rule);
  q.syn_q = quantile_of(observed.syn, syn, rule);
  q.meta = {ensemble.family, n, ensemble.seed, ensemble.target_tmi, ensemble.n_failed};
  return q;
}

bool is_retryable(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::CholeskyFailure:
    case ErrorKind::ZeroChannel:
    case ErrorKind::BracketFailure:
    case ErrorKind::TargetUnreachable:
    case ErrorKind::ZeroDynamics:
    case ErrorKind::UnstableSystem:
    case ErrorKind::NegativeInformation:
    case ErrorKind::InconsistentInformation:
      return true;
    default:
      return false;
  }
}

NullParams sample_null_params(std::size_t d_x, std::size_t d_y, std::size_t d_t, Rng& rng) {
  if (d_x < 1 || d_y < 1 || d_t < 1) throw Error(ErrorKind::InvalidArgument, "null dimensions must be >= 1");
  const auto ds = static_cast<Eigen::Index>(d_x + d_y);
  const auto dt = static_cast<Eigen::Index>(d_t);
  Eigen::MatrixXd a = standard_normal_matrix(dt, ds, rng);

  auto wishart = [&rng](Eigen::Index dim) {
    for (int attempt = 0;; ++attempt) {
      try {
        return CovMatrix(sample_wishart_identity(dim, static_cast<double>(dim), rng));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::CholeskyFailure || attempt >= 10) throw;
      }
    }
  };
  CovMatrix sigma_s = wishart(ds);
  CovMatrix sigma_eps = wishart(dt);
  return {std::move(a), std::move(sigma_s), std::move(sigma_eps)};
}

namespace {

Eigen::VectorXd checked_spectrum(const Eigen::MatrixXd& a, const CovMatrix& sigma_s,
                                 const CovMatrix& sigma_eps) {
  Eigen::VectorXd spectrum = snr_spectrum(a, sigma_s, sigma_eps);
  if (spectrum.size() == 0 || !(spectrum.maxCoeff() > 0.0))
    throw Error(ErrorKind::ZeroChannel, "A sigma_s A^T vanishes; no gain reaches a positive TMI");
  return spectrum;
}

}  // namespace

double noise_root_fn(const Eigen::MatrixXd& a, const CovMatrix& sigma_s, const CovMatrix& sigma_eps,
                     double target_tmi, double g) {
  if (!(g > 0.0)) throw Error(ErrorKind::InvalidArgument, "noise gain must be positive");
  const Eigen::VectorXd spectrum = checked_spectrum(a, sigma_s, sigma_eps);
  return std::exp(-2.0 * tmi_from_spectrum(spectrum, g)) - std::exp(-2.0 * target_tmi);
}

double solve_g(const Eigen::MatrixXd& a, const CovMatrix& sigma_s, const CovMatrix& sigma_eps,
               double target_tmi) {
  if (!(target_tmi > 0.0) || !std::isfinite(target_tmi))
    throw Error(ErrorKind::InvalidArgument, "target TMI must be positive and finite");
  const Eigen::VectorXd spectrum = checked_spectrum(a, sigma_s, sigma_eps);
  auto tmi = [&](double g) { return tmi_from_spectrum(spectrum, g); };

  // TMI falls with g: the bracket needs tmi(lo) >= target >= tmi(hi).
  double lo = 1e-6;
  double hi = 1e6;
  for (int k = 0; tmi(hi) > target_tmi; ++k) {
    if (k == 60) throw Error(ErrorKind::BracketFailure, "target TMI too small to bracket");
    hi *= 2.0;
  }
  for (int k = 0; tmi(lo) < target_tmi; ++k) {
    if (k == 60) throw Error(ErrorKind::BracketFailure, "target TMI too large to bracket");
    lo *= 0.5;
  }

  // Relative tolerance for small targets, so g itself is resolved too.
  const RootResult root = bisect([&](double g) { return target_tmi - tmi(g); }, lo, hi,
                                 1e-10 * std::min(1.0, target_tmi), 200, geometric_mid);
  if (!(std::abs(root.residual) < 1e-9))
    throw Error(ErrorKind::BracketFailure, "bisection on g did not reach the TMI tolerance");
  return root.x;
}

NullEnsemble build_null_ensemble(double target_tmi, std::size_t d_x, std::size_t d_y,
                                 std::size_t d_t, std::size_t n, std::uint64_t seed,
                                 const EnsembleOptions& opts) {
  if (!(target_tmi > 0.0)) throw Error(ErrorKind::ZeroTmi, "null ensemble needs a positive target TMI");
  return run_ensemble(NullFamily::Gaussian, target_tmi, n, seed, opts, [&](Rng& rng, std::size_t) {
    NullParams p = sample_null_params(d_x, d_y, d_t, rng);
    const double g = solve_g(p.a, p.sigma_s, p.sigma_eps, target_tmi);
    const GaussianPidSystem sys(std::move(p.a), std::move(p.sigma_s), std::move(p.sigma_eps), g, d_x);
    PidAtoms atoms = pid_gaussian(sys);
    if (!(std::abs(atoms.tmi - target_tmi) <= 1e-6 * target_tmi))
      throw Error(ErrorKind::BracketFailure, "null sample TMI drifted from the target");
    return atoms;
  });
}

NormalizedAtoms numit_normalize(const GaussianPidSystem& sys, std::size_t n, std::uint64_t seed,
                                const EnsembleOptions& opts) {
  const PidAtoms observed = pid_gaussian(sys);
  if (!(observed.tmi >= 1e-12)) throw Error(ErrorKind::ZeroTmi, "system carries no information");
  const NullEnsemble ens = build_null_ensemble(observed.tmi, sys.d_x, sys.d_y, sys.d_t(), n, seed, opts);
  return quantiles_against(observed, ens, opts.tie_rule);
}

}  // namespace numit
