#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "numit/error.hpp"
#include "numit/gaussian.hpp"
#include "numit/parallel.hpp"
#include "numit/pid.hpp"
#include "numit/random.hpp"

namespace numit {

enum class NullFamily { Gaussian, Var, Discrete };

std::string_view to_string(NullFamily family) noexcept;

/// N PID-atom tuples of random systems that all share one TMI.
struct NullEnsemble {
  double target_tmi = 0.0;
  std::vector<PidAtoms> samples;
  NullFamily family = NullFamily::Gaussian;
  std::uint64_t seed = 0;
  std::size_t n_requested = 0;
  std::size_t n_failed = 0;  ///< rejected draws that were resampled
};

/// How a null value equal to the observed one is counted.
///   Lower:    #{null < v} / N
///   Midpoint: (#{null < v} + #{null == v} / 2) / N
enum class TieRule { Lower, Midpoint };

struct EnsembleMeta {
  NullFamily family = NullFamily::Gaussian;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double target_tmi = 0.0;
  std::size_t n_failed = 0;
};

/// Quantiles of the observed atoms within their null distributions.
struct NormalizedAtoms {
  double red_q = 0.0;
  double unx_q = 0.0;
  double uny_q = 0.0;
  double syn_q = 0.0;
  EnsembleMeta meta;

  friend bool operator==(const NormalizedAtoms& a, const NormalizedAtoms& b) {
    return a.red_q == b.red_q && a.unx_q == b.unx_q && a.uny_q == b.uny_q && a.syn_q == b.syn_q &&
           a.meta.n == b.meta.n && a.meta.seed == b.meta.seed &&
           a.meta.target_tmi == b.meta.target_tmi && a.meta.n_failed == b.meta.n_failed;
  }
};

struct EnsembleOptions {
  unsigned workers = 0;            ///< 0 = available parallelism
  std::size_t retry_budget = 10;   ///< resamples allowed per sample index
  TieRule tie_rule = TieRule::Lower;
};

/// Throws EmptyEnsemble on an empty null list.
double quantile_of(double value, std::span<const double> nulls, TieRule rule = TieRule::Lower);

NormalizedAtoms quantiles_against(const PidAtoms& observed, const NullEnsemble& ensemble,
                                  TieRule rule = TieRule::Lower);

/// Error kinds a null-model draw may raise that mean "discard and redraw".
bool is_retryable(ErrorKind kind) noexcept;

/// Shared ensemble driver. `draw(rng, i)` builds one null system and returns
/// its atoms, throwing a retryable Error to reject the draw. Sample i, retry
/// r uses the substream mix_seed(seed, i, r); samples land in index order.
template <class Draw>
NullEnsemble run_ensemble(NullFamily family, double target_tmi, std::size_t n, std::uint64_t seed,
                          const EnsembleOptions& opts, Draw&& draw) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "ensemble size must be >= 1");
  NullEnsemble out;
  out.family = family;
  out.target_tmi = target_tmi;
  out.seed = seed;
  out.n_requested = n;
  out.samples.resize(n);
  std::vector<std::size_t> failures(n, 0);

  parallel_for(n, opts.workers, [&](std::size_t i) {
    for (std::size_t attempt = 0;; ++attempt) {
      Rng rng = make_stream(seed, i, attempt);
      try {
        out.samples[i] = draw(rng, i);
        return;
      } catch (const Error& e) {
        if (!is_retryable(e.kind())) throw;
        failures[i] += 1;
        if (attempt >= opts.retry_budget)
          throw Error(ErrorKind::SamplingExhausted,
                      "null sample " + std::to_string(i) + " failed " +
                          std::to_string(attempt + 1) + " draws; last: " + e.what());
      }
    }
  });

  for (auto f : failures) out.n_failed += f;
  return out;
}

// --- Gaussian null model -------------------------------------------------

struct NullParams {
  Eigen::MatrixXd a;
  CovMatrix sigma_s;
  CovMatrix sigma_eps;
};

/// A ~ N(0,1) entrywise (d_T x d_S), sigma_s ~ W(I, d_S), sigma_eps ~ W(I, d_T).
/// Wishart draws failing SPD validation are redrawn up to 10 times.
NullParams sample_null_params(std::size_t d_x, std::size_t d_y, std::size_t d_t, Rng& rng);

/// exp(-2 TMI(g)) - exp(-2 target): zero exactly at the gain that yields the
/// target TMI, strictly increasing in g. Throws ZeroChannel if A sigma_s A^T = 0.
double noise_root_fn(const Eigen::MatrixXd& a, const CovMatrix& sigma_s, const CovMatrix& sigma_eps,
                     double target_tmi, double g);

/// Noise gain at which the channel carries `target_tmi` nats. Bisection on
/// log g from [1e-6, 1e6], with each end doubled outward up to 60 times.
double solve_g(const Eigen::MatrixXd& a, const CovMatrix& sigma_s, const CovMatrix& sigma_eps,
               double target_tmi);

NullEnsemble build_null_ensemble(double target_tmi, std::size_t d_x, std::size_t d_y,
                                 std::size_t d_t, std::size_t n, std::uint64_t seed,
                                 const EnsembleOptions& opts = {});

/// Full procedure: PID of `sys`, a null ensemble at its TMI and dimensions,
/// and the quantile of each observed atom.
NormalizedAtoms numit_normalize(const GaussianPidSystem& sys, std::size_t n, std::uint64_t seed,
                                const EnsembleOptions& opts = {});

}  // namespace numit
