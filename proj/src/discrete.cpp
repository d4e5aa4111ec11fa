#include "numit/discrete.hpp"

#include <cmath>

#include "numit/error.hpp"
#include "numit/root_finding.hpp"

namespace numit {

namespace {

double binary_entropy(double p) {
  const std::array<double, 2> v{p, 1.0 - p};
  return discrete_entropy(v);
}

// p(Z = 1) for the noiseless gate output.
double gate_one_probability(const JointPmf& pmf, const Gate& gate) {
  double p1 = 0.0;
  for (std::size_t i = 0; i < 4; ++i)
    if (gate.output(i)) p1 += pmf[i];
  return p1;
}

double tmi_closed_form(const JointPmf& pmf, const Gate& gate, double p_eps) {
  const double z1 = gate_one_probability(pmf, gate);
  const double t1 = z1 * (1.0 - p_eps) + (1.0 - z1) * p_eps;
  return std::max(0.0, binary_entropy(t1) - binary_entropy(p_eps));
}

}  // namespace

JointPmf::JointPmf(std::array<double, 4> probs) : probs_(probs) {
  double total = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw Error(ErrorKind::InvalidArgument, "probabilities must be >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw Error(ErrorKind::InvalidArgument, "probabilities must sum to 1");
}

Gate Gate::parse(std::string_view bits) {
  if (bits.size() != 4) throw Error(ErrorKind::InvalidArgument, "gate must be a 4-character bitstring");
  std::array<std::uint8_t, 4> t{};
  for (std::size_t i = 0; i < 4; ++i) {
    if (bits[i] != '0' && bits[i] != '1')
      throw Error(ErrorKind::InvalidArgument, "gate bitstring may only contain 0 and 1");
    t[i] = static_cast<std::uint8_t>(bits[i] - '0');
  }
  return Gate(t);
}

std::string Gate::str() const {
  std::string s(4, '0');
  for (std::size_t i = 0; i < 4; ++i) s[i] = truth_[i] ? '1' : '0';
  return s;
}

bool Gate::is_constant() const noexcept {
  return truth_[0] == truth_[1] && truth_[1] == truth_[2] && truth_[2] == truth_[3];
}

Gate Gate::complement() const noexcept {
  std::array<std::uint8_t, 4> t{};
  for (std::size_t i = 0; i < 4; ++i) t[i] = truth_[i] ? 0 : 1;
  return Gate(t);
}

const std::array<Gate, 7>& canonical_gates() {
  static const std::array<Gate, 7> gates{
      Gate({0, 1, 1, 0}),  // Z1 XOR
      Gate({0, 0, 1, 1}),  // Z2 copy X
      Gate({0, 1, 0, 1}),  // Z3 copy Y
      Gate({0, 1, 1, 1}),  // Z4 OR
      Gate({1, 0, 1, 1}),  // Z5
      Gate({1, 1, 0, 1}),  // Z6
      Gate({1, 1, 1, 0}),  // Z7 NAND
  };
  return gates;
}

int canonical_index(const Gate& g) noexcept {
  if (g.is_constant()) return -1;
  const auto& gates = canonical_gates();
  for (std::size_t i = 0; i < gates.size(); ++i)
    if (gates[i] == g || gates[i] == g.complement()) return static_cast<int>(i);
  return -1;
}

DiscreteSystem::DiscreteSystem(JointPmf pmf_, Gate gate_, double p_eps_)
    : pmf(pmf_), gate(gate_), p_eps(p_eps_) {
  if (!(p_eps >= 0.0 && p_eps <= 1.0)) throw Error(ErrorKind::InvalidArgument, "p_eps must lie in [0, 1]");
}

JointPmf sample_source_pmf(double alpha, Rng& rng) {
  const std::vector<double> p = sample_dirichlet(4, alpha, rng);
  // Renormalise in a fixed order so the sum is exact to rounding.
  std::array<double, 4> probs{p[0], p[1], p[2], 0.0};
  probs[3] = std::max(0.0, 1.0 - probs[0] - probs[1] - probs[2]);
  return JointPmf(probs);
}

std::pair<double, double> target_distribution(const DiscreteSystem& sys) {
  const double z1 = gate_one_probability(sys.pmf, sys.gate);
  const double z0 = 1.0 - z1;
  const double t0 = z0 * (1.0 - sys.p_eps) + z1 * sys.p_eps;
  return {t0, 1.0 - t0};
}

double discrete_entropy(std::span<const double> p) {
  double h = 0.0;
  for (double x : p)
    if (x > 0.0) h -= x * std::log(x);
  return std::max(h, 0.0);
}

double discrete_tmi(const DiscreteSystem& sys) {
  const auto [t0, t1] = target_distribution(sys);
  const std::array<double, 2> pt{t0, t1};
  return std::max(0.0, discrete_entropy(pt) - binary_entropy(sys.p_eps));
}

double discrete_tmi_from_joint(const DiscreteSystem& sys) {
  // p(s, t) over the 4 source states and 2 target states.
  std::array<double, 8> joint{};
  std::array<double, 2> pt{};
  for (std::size_t s = 0; s < 4; ++s) {
    const auto z = sys.gate.output(s);
    for (std::size_t t = 0; t < 2; ++t) {
      const double flip = (t == z) ? 1.0 - sys.p_eps : sys.p_eps;
      joint[2 * s + t] = sys.pmf[s] * flip;
      pt[t] += joint[2 * s + t];
    }
  }
  // H(T|S) = -sum p(s,t) log p(t|s)
  double h_cond = 0.0;
  for (std::size_t s = 0; s < 4; ++s) {
    const double ps = sys.pmf[s];
    for (std::size_t t = 0; t < 2; ++t) {
      const double pst = joint[2 * s + t];
      if (pst > 0.0) h_cond -= pst * std::log(pst / ps);
    }
  }
  return discrete_entropy(pt) - h_cond;
}

double marginal_mi_discrete(const DiscreteSystem& sys, Source source) {
  // p(a, t) for a in {0, 1} the chosen source's value.
  std::array<std::array<double, 2>, 2> pat{};
  for (unsigned x = 0; x < 2; ++x) {
    for (unsigned y = 0; y < 2; ++y) {
      const double pxy = sys.pmf[2 * x + y];
      const unsigned a = source == Source::X ? x : y;
      const auto z = sys.gate(x, y);
      pat[a][z] += pxy * (1.0 - sys.p_eps);
      pat[a][1 - z] += pxy * sys.p_eps;
    }
  }
  const std::array<double, 2> pt{pat[0][0] + pat[1][0], pat[0][1] + pat[1][1]};
  double h_cond = 0.0;
  for (unsigned a = 0; a < 2; ++a) {
    const double pa = pat[a][0] + pat[a][1];
    for (unsigned t = 0; t < 2; ++t)
      if (pat[a][t] > 0.0) h_cond -= pat[a][t] * std::log(pat[a][t] / pa);
  }
  return std::max(0.0, discrete_entropy(pt) - h_cond);
}

PidAtoms pid_discrete(const DiscreteSystem& sys) {
  return mmi_pid(marginal_mi_discrete(sys, Source::X), marginal_mi_discrete(sys, Source::Y),
                 discrete_tmi(sys));
}

double solve_p_eps(const JointPmf& pmf, const Gate& gate, double target_tmi) {
  if (!(target_tmi > 0.0)) throw Error(ErrorKind::InvalidArgument, "target TMI must be positive");
  const double noiseless = tmi_closed_form(pmf, gate, 0.0);
  if (target_tmi > noiseless + 1e-12)
    throw Error(ErrorKind::TargetUnreachable, "target TMI " + std::to_string(target_tmi) +
                                                  " exceeds the noiseless channel's " + std::to_string(noiseless));
  if (std::abs(noiseless - target_tmi) < 1e-10) return 0.0;

  // TMI falls from `noiseless` at 0 to 0 at 1/2.
  const RootResult root = bisect([&](double p) { return target_tmi - tmi_closed_form(pmf, gate, p); }, 0.0,
                                 0.5, 1e-10, 200, arithmetic_mid);
  if (!(std::abs(root.residual) < 1e-9) || !(root.x < 0.5))
    throw Error(ErrorKind::TargetUnreachable, "bisection on p_eps did not converge");
  return root.x;
}

NullEnsemble build_null_ensemble_discrete(double target_tmi, std::size_t n, std::uint64_t seed,
                                          const DiscreteNullOptions& dopts, EnsembleOptions opts) {
  if (!(target_tmi > 0.0)) throw Error(ErrorKind::ZeroTmi, "null ensemble needs a positive target TMI");
  if (!(dopts.alpha > 0.0)) throw Error(ErrorKind::InvalidArgument, "Dirichlet alpha must be positive");
  const auto& gates = canonical_gates();
  const bool stratified = dopts.selection == GateSelection::Stratified;
  return run_ensemble(NullFamily::Discrete, target_tmi, n, seed, opts, [&](Rng& rng, std::size_t i) {
    std::uniform_int_distribution<std::size_t> pick(0, gates.size() - 1);
    const std::size_t drawn = pick(rng);
    const Gate& gate = gates[stratified ? i % gates.size() : drawn];
    const JointPmf pmf = sample_source_pmf(dopts.alpha, rng);
    const double p = solve_p_eps(pmf, gate, target_tmi);
    return pid_discrete(DiscreteSystem(pmf, gate, p));
  });
}

NormalizedAtoms numit_normalize_discrete(const DiscreteSystem& sys, std::size_t n, double alpha,
                                         std::uint64_t seed, EnsembleOptions opts) {
  const PidAtoms observed = pid_discrete(sys);
  if (!(observed.tmi >= 1e-12)) throw Error(ErrorKind::ZeroTmi, "system carries no information");
  const NullEnsemble ens = build_null_ensemble_discrete(observed.tmi, n, seed, {.alpha = alpha}, opts);
  return quantiles_against(observed, ens, opts.tie_rule);
}

}  // namespace numit
