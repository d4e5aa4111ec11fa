#include <doctest.h>

#include <cmath>
#include <atomic>
#include <random>

#include "numit/error.hpp"
#include "numit/null_model.hpp"
#include "numit/stats.hpp"
#include "oracles.hpp"

using namespace numit;
using Eigen::MatrixXd;

namespace {

struct FiveParams {
  MatrixXd a = (MatrixXd(1, 2) << 0.5, 0.5).finished();
  CovMatrix s{(MatrixXd(2, 2) << 20, 10, 10, 20).finished()};
  CovMatrix e{MatrixXd::Identity(1, 1)};
};

}  // namespace

TEST_CASE("seed mixing") {
  CHECK(mix_seed(1, 2) == mix_seed(1, 2));
  CHECK(mix_seed(1, 2) != mix_seed(1, 3));
  CHECK(mix_seed(1, 2, 0) != mix_seed(1, 2, 1));
  CHECK(mix_seed(1, 2) != mix_seed(2, 2));
  static_assert(mix_seed(7, 7) == mix_seed(7, 7, 0));
}

TEST_CASE("Wishart sampler moments") {
  Rng rng(17);
  const int n = 10000;
  MatrixXd mean = MatrixXd::Zero(2, 2);
  for (int i = 0; i < n; ++i) mean += sample_wishart_identity(2, 2, rng) / n;
  CHECK((mean - 2.0 * MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 0.1);

  // Diagonal of W(I, d) is chi-square(d): variance 2d.
  Rng rng3(18);
  double m1 = 0, m2 = 0;
  for (int i = 0; i < n; ++i) {
    const double w = sample_wishart_identity(3, 3, rng3)(1, 1);
    m1 += w / n;
    m2 += w * w / n;
  }
  CHECK(m1 == doctest::Approx(3.0).epsilon(0.05));
  CHECK(m2 - m1 * m1 == doctest::Approx(6.0).epsilon(0.1));
}

TEST_CASE("null parameter sampling") {
  Rng a(99), b(99);
  const NullParams p = sample_null_params(2, 1, 3, a);
  const NullParams q = sample_null_params(2, 1, 3, b);
  CHECK(p.a.rows() == 3);
  CHECK(p.a.cols() == 3);
  CHECK(p.sigma_s.dim() == 3);
  CHECK(p.sigma_eps.dim() == 3);
  CHECK(p.a == q.a);
  CHECK(p.sigma_s.entries() == q.sigma_s.entries());
}

TEST_CASE("root function") {
  FiveParams f;
  const double target = 0.5 * std::log(16.0);
  CHECK(std::abs(noise_root_fn(f.a, f.s, f.e, target, 1.0)) < 1e-9);
  CHECK(noise_root_fn(f.a, f.s, f.e, target, 1e12) > 0.0);
  CHECK_THROWS_AS(noise_root_fn(MatrixXd::Zero(1, 2), f.s, f.e, target, 1.0), Error);

  SUBCASE("monotone on a log grid for random draws") {
    for (std::uint64_t k = 0; k < 100; ++k) {
      Rng rng(k);
      const NullParams p = sample_null_params(1 + k % 3, 1 + k % 2, 1 + k % 4, rng);
      double prev = -INFINITY;
      for (double lg = -3; lg <= 3; lg += 0.25) {
        const double v = noise_root_fn(p.a, p.sigma_s, p.sigma_eps, 1.0, std::pow(10.0, lg));
        REQUIRE(v > prev);
        prev = v;
      }
    }
  }
}

TEST_CASE("gain solver") {
  FiveParams f;
  CHECK(solve_g(f.a, f.s, f.e, 0.5 * std::log(16.0)) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(solve_g(f.a, f.s, f.e, 0.5 * std::log(1.15)) == doctest::Approx(100.0).epsilon(1e-3));
  try {
    solve_g(MatrixXd::Zero(1, 2), f.s, f.e, 1.0);
    FAIL("expected ZeroChannel");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ZeroChannel);
  }
  // Tiny target: either a huge finite gain or a bracket failure.
  try {
    const double g = solve_g(f.a, f.s, f.e, 1e-12);
    CHECK(std::isfinite(g));
    CHECK(g == doctest::Approx(15.0 / std::expm1(2e-12)).epsilon(1e-3));
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::BracketFailure);
  }
}

TEST_CASE("quantiles") {
  const std::vector<double> nulls{1, 2, 3, 4};
  CHECK(quantile_of(5, nulls) == 1.0);
  CHECK(quantile_of(2.5, nulls) == 0.5);
  CHECK(quantile_of(0, nulls) == 0.0);
  CHECK(quantile_of(2, nulls, TieRule::Lower) == 0.25);
  CHECK(quantile_of(2, nulls, TieRule::Midpoint) == 0.375);
  const std::vector<double> zeros{0, 0, 0, 1};
  CHECK(quantile_of(0, zeros, TieRule::Lower) == 0.0);
  CHECK(quantile_of(0, zeros, TieRule::Midpoint) == 0.375);
  CHECK_THROWS_AS(quantile_of(1, std::vector<double>{}), Error);

  SUBCASE("probability integral transform") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n01;
    std::vector<double> q;
    for (int r = 0; r < 1000; ++r) {
      std::vector<double> null(200);
      for (auto& v : null) v = n01(rng);
      q.push_back(quantile_of(n01(rng), null, TieRule::Midpoint));
    }
    CHECK(ks_uniform(q) < 0.05);
  }
}

TEST_CASE("Gaussian null ensemble") {
  const NullEnsemble e = build_null_ensemble(1.0, 1, 1, 1, 100, 5, {.workers = 1});
  CHECK(e.samples.size() == 100);
  CHECK(e.n_requested == 100);
  CHECK(e.family == NullFamily::Gaussian);
  for (const auto& s : e.samples) {
    CHECK(std::abs(s.tmi - 1.0) < 1e-6);
    CHECK(std::abs(s.sum() - s.tmi) < 1e-9);
  }
  CHECK_THROWS_AS(build_null_ensemble(1.0, 1, 1, 1, 0, 5), Error);

  SUBCASE("independent of worker count") {
    const NullEnsemble p = build_null_ensemble(1.0, 2, 1, 2, 64, 5, {.workers = 4});
    const NullEnsemble q = build_null_ensemble(1.0, 2, 1, 2, 64, 5, {.workers = 1});
    CHECK(p.samples == q.samples);
    CHECK(p.n_failed == q.n_failed);
  }

  SUBCASE("every accepted draw hits the target") {
    for (double target : {0.1, 0.7, 2.0, 4.0}) {
      const NullEnsemble h = build_null_ensemble(target, 3, 2, 4, 50, 11, {.workers = 1});
      for (const auto& s : h.samples) CHECK(std::abs(s.tmi - target) < 1e-9);
    }
  }
}

TEST_CASE("ensemble retry budget") {
  std::atomic<int> calls{0};
  auto flaky = [&](Rng& rng, std::size_t) {
    ++calls;
    if (rng() % 2 == 0) throw Error(ErrorKind::BracketFailure, "flaky");
    return PidAtoms{1, 1, 0, 0, 0};
  };
  const NullEnsemble e = run_ensemble(NullFamily::Gaussian, 1.0, 200, 1, {.workers = 1, .retry_budget = 64}, flaky);
  CHECK(e.samples.size() == 200);
  CHECK(static_cast<std::size_t>(calls.load()) == 200 + e.n_failed);
  CHECK(e.n_failed > 0);

  auto broken = [](Rng&, std::size_t) -> PidAtoms { throw Error(ErrorKind::ZeroChannel, "never"); };
  try {
    run_ensemble(NullFamily::Gaussian, 1.0, 3, 1, {.workers = 1, .retry_budget = 2}, broken);
    FAIL("expected SamplingExhausted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SamplingExhausted);
  }
  auto fatal = [](Rng&, std::size_t) -> PidAtoms { throw Error(ErrorKind::DimensionMismatch, "bug"); };
  try {
    run_ensemble(NullFamily::Gaussian, 1.0, 3, 1, {.workers = 2}, fatal);
    FAIL("expected the original error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DimensionMismatch);
  }
}

TEST_CASE("Gaussian normalisation") {
  FiveParams f;
  const GaussianPidSystem sys(f.a, f.s, f.e, 1.0, 1);
  const NormalizedAtoms q = numit_normalize(sys, 200, 3, {.workers = 1});
  for (double v : {q.red_q, q.unx_q, q.uny_q, q.syn_q}) CHECK((v >= 0.0 && v <= 1.0));
  CHECK(q.meta.n == 200);
  CHECK(q.meta.target_tmi == doctest::Approx(0.5 * std::log(16.0)));
  CHECK(q == numit_normalize(sys, 200, 3, {.workers = 3}));

  const GaussianPidSystem zero(MatrixXd::Zero(1, 2), f.s, f.e, 1.0, 1);
  try {
    numit_normalize(zero, 10, 1);
    FAIL("expected ZeroTmi");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ZeroTmi);
  }
}
