#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace numit {

using Rng = std::mt19937_64;

/// SplitMix64 finaliser.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the independent substream `(stream, attempt)` under `master`.
/// Ensemble sample i, retry r always draws from mix_seed(master, i, r), so
/// results never depend on how samples are scheduled across workers.
constexpr std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t attempt = 0) noexcept {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
  return splitmix64(h ^ splitmix64(attempt + 0x8cb92ba72f3d8dd7ULL));
}

inline Rng make_stream(std::uint64_t master, std::uint64_t stream, std::uint64_t attempt = 0) {
  return Rng(mix_seed(master, stream, attempt));
}

Eigen::MatrixXd standard_normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng);

/// One draw from W_dim(I, dof) by the Bartlett decomposition. Requires
/// dof >= dim so that every chi-square degree of freedom is positive.
Eigen::MatrixXd sample_wishart_identity(Eigen::Index dim, double dof, Rng& rng);

/// Symmetric Dirichlet(alpha, ..., alpha) over k outcomes via normalised
/// Gamma(alpha, 1) draws.
std::vector<double> sample_dirichlet(std::size_t k, double alpha, Rng& rng);

}  // namespace numit
