#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>

#include "numit/null_model.hpp"
#include "numit/pid.hpp"
#include "numit/random.hpp"

namespace numit {

/// Joint distribution of two binary sources, ordered (p00, p01, p10, p11)
/// where pab = p(X = a, Y = b).
class JointPmf {
 public:
  /// Entries must be >= 0 and sum to 1 within 1e-12.
  explicit JointPmf(std::array<double, 4> probs);

  static JointPmf uniform() { return JointPmf({0.25, 0.25, 0.25, 0.25}); }

  const std::array<double, 4>& probs() const noexcept { return probs_; }
  double operator[](std::size_t i) const { return probs_[i]; }

 private:
  std::array<double, 4> probs_;
};

/// Two-input Boolean gate; bit i of the table is the output on input i,
/// with inputs ordered 00, 01, 10, 11.
class Gate {
 public:
  constexpr explicit Gate(std::array<std::uint8_t, 4> truth) : truth_(truth) {}

  /// From a 4-character bitstring over inputs (00, 01, 10, 11), e.g. "0110".
  static Gate parse(std::string_view bits);

  std::uint8_t operator()(unsigned x, unsigned y) const { return truth_[2 * x + y]; }
  std::uint8_t output(std::size_t input) const { return truth_[input]; }
  std::string str() const;

  bool is_constant() const noexcept;
  Gate complement() const noexcept;

  friend bool operator==(const Gate&, const Gate&) = default;

 private:
  std::array<std::uint8_t, 4> truth_;
};

/// Z1..Z7: the 2-input gates left after dropping the two constant tables and
/// identifying each table with its output complement.
const std::array<Gate, 7>& canonical_gates();

/// Index (0-based) of the canonical gate equivalent to `g` under output
/// complement, or -1 for constant gates.
int canonical_index(const Gate& g) noexcept;

/// T = f(X, Y) flipped with probability p_eps.
struct DiscreteSystem {
  JointPmf pmf;
  Gate gate;
  double p_eps;

  /// p_eps must lie in [0, 1].
  DiscreteSystem(JointPmf pmf, Gate gate, double p_eps);
};

JointPmf sample_source_pmf(double alpha, Rng& rng);

/// (p(T=0), p(T=1)).
std::pair<double, double> target_distribution(const DiscreteSystem& sys);

/// -sum p log p in nats, with 0 log 0 = 0.
double discrete_entropy(std::span<const double> p);

/// H(T) - H_2(p_eps).
double discrete_tmi(const DiscreteSystem& sys);

/// H(T) - H(T|S) with H(T|S) computed from the full (S, T) joint table.
/// Independent of the closed form used by discrete_tmi.
double discrete_tmi_from_joint(const DiscreteSystem& sys);

enum class Source { X, Y };

/// I(X;T) or I(Y;T) = H(T) - H(T|source).
double marginal_mi_discrete(const DiscreteSystem& sys, Source source);

PidAtoms pid_discrete(const DiscreteSystem& sys);

/// Flip probability in [0, 0.5) at which (pmf, gate) reaches `target_tmi`.
/// Throws TargetUnreachable when the noiseless channel carries less.
double solve_p_eps(const JointPmf& pmf, const Gate& gate, double target_tmi);

inline constexpr std::size_t kDiscreteRetryBudget = 1000;

enum class GateSelection { Uniform, Stratified };

struct DiscreteNullOptions {
  double alpha = 1.0;
  GateSelection selection = GateSelection::Uniform;
};

/// Each null: a canonical gate (uniform draw, or sample i uses gate i mod 7
/// when stratified), a Dir(alpha) pmf, and the solved p_eps. Unreachable
/// targets are redrawn, up to kDiscreteRetryBudget times per sample. Near the
/// ln 2 ceiling most draws cannot reach the target, hence the large budget.
NullEnsemble build_null_ensemble_discrete(double target_tmi, std::size_t n, std::uint64_t seed,
                                          const DiscreteNullOptions& dopts = {},
                                          EnsembleOptions opts = {.retry_budget = kDiscreteRetryBudget});

NormalizedAtoms numit_normalize_discrete(const DiscreteSystem& sys, std::size_t n, double alpha,
                                         std::uint64_t seed, EnsembleOptions opts = {.retry_budget = kDiscreteRetryBudget});

}  // namespace numit
