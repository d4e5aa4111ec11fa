#include <doctest.h>

#include <cmath>
#include <random>

#include "numit/error.hpp"
#include "numit/var.hpp"
#include "oracles.hpp"

using namespace numit;
using Eigen::MatrixXd;

namespace {

MatrixXd s1(double v) { return MatrixXd::Constant(1, 1, v); }

VarModel scalar(double a, double v = 1.0) { return VarModel({s1(a)}, CovMatrix(s1(v))); }

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::Io;
}

// Random stable VAR(p): coefficients scaled so the companion radius is `rho`.
VarModel random_stable(std::size_t n, std::size_t p, double rho, Rng& rng) {
  std::vector<MatrixXd> a;
  for (std::size_t l = 0; l < p; ++l) a.push_back(standard_normal_matrix(n, n, rng));
  const VarModel raw(a, CovMatrix(MatrixXd::Identity(n, n)));
  const double r = spectral_radius(companion_matrix(raw));
  // Scaling lag l by c^l scales every companion eigenvalue by c.
  const double c = rho / r;
  for (std::size_t l = 0; l < p; ++l) a[l] *= std::pow(c, static_cast<double>(l + 1));
  return VarModel(a, CovMatrix(sample_wishart_identity(n, n + 2.0, rng) + 0.1 * MatrixXd::Identity(n, n)));
}

}  // namespace

TEST_CASE("companion matrix and spectral radius") {
  const VarModel m1 = scalar(0.9);
  CHECK(companion_matrix(m1) == s1(0.9));
  CHECK(spectral_radius(companion_matrix(m1)) == doctest::Approx(0.9));

  const VarModel m2({s1(0.5), s1(0.2)}, CovMatrix(s1(1)));
  MatrixXd c(2, 2);
  c << 0.5, 0.2, 1, 0;
  CHECK(companion_matrix(m2) == c);

  MatrixXd nil(2, 2);
  nil << 0, 1, 0, 0;
  CHECK(spectral_radius(nil) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(spectral_radius((MatrixXd(2, 2) << 0.3, 0, 0, -0.8).finished()) == doctest::Approx(0.8).epsilon(1e-12));
  const double th = 0.7;
  MatrixXd rot(2, 2);
  rot << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  CHECK(std::abs(spectral_radius(0.7 * rot) - 0.7) < 1e-9);
}

TEST_CASE("Lyapunov solver") {
  const MatrixXd w = (MatrixXd(2, 2) << 2, 0.3, 0.3, 1).finished();
  CHECK((solve_lyapunov(MatrixXd::Zero(2, 2), w).entries() - w).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(solve_lyapunov(s1(0.5), s1(1)).entries()(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
  CHECK(kind_of([] { solve_lyapunov(s1(1.0), s1(1)); }) == ErrorKind::UnstableSystem);

  SUBCASE("residual and series oracle") {
    Rng rng(21);
    for (int t = 0; t < 30; ++t) {
      const auto n = 1 + t % 6;
      const VarModel m = random_stable(n, 1, 0.9, rng);
      const MatrixXd& a = m.coeffs()[0];
      const MatrixXd g = solve_lyapunov(a, m.resid_cov().entries()).entries();
      const MatrixXd resid = g - a * g * a.transpose() - m.resid_cov().entries();
      CHECK(resid.cwiseAbs().maxCoeff() < 1e-10 * g.cwiseAbs().maxCoeff());
      const MatrixXd ref = oracle::lyapunov_series(a, m.resid_cov().entries());
      CHECK((g - ref).cwiseAbs().maxCoeff() < 1e-9 * ref.cwiseAbs().maxCoeff());
    }
  }

  SUBCASE("doubling path above the direct-solve size") {
    Rng rng(22);
    const VarModel m = random_stable(45, 1, 0.95, rng);
    const MatrixXd& a = m.coeffs()[0];
    const MatrixXd g = solve_lyapunov(a, m.resid_cov().entries()).entries();
    const MatrixXd resid = g - a * g * a.transpose() - m.resid_cov().entries();
    CHECK(resid.cwiseAbs().maxCoeff() < 1e-10 * g.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("autocovariance sequence") {
  const auto g = autocov_sequence(scalar(0.5), 2);
  REQUIRE(g.size() == 3);
  CHECK(g[0](0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
  CHECK(g[1](0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(g[2](0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

  const VarModel z({MatrixXd::Zero(2, 2)}, CovMatrix(MatrixXd::Identity(2, 2)));
  const auto gz = autocov_sequence(z, 3);
  CHECK(gz[0] == MatrixXd::Identity(2, 2));
  CHECK(gz[2].isZero());

  SUBCASE("Yule-Walker recursion beyond the order") {
    Rng rng(31);
    for (int t = 0; t < 20; ++t) {
      const std::size_t n = 1 + t % 4, p = 1 + t % 3;
      const VarModel m = random_stable(n, p, 0.85, rng);
      const auto gs = autocov_sequence(m, p + 3);
      for (std::size_t k = p; k <= p + 3; ++k) {
        MatrixXd rhs = MatrixXd::Zero(n, n);
        for (std::size_t l = 1; l <= p; ++l) rhs += m.coeffs()[l - 1] * gs[k - l];
        CHECK((gs[k] - rhs).cwiseAbs().maxCoeff() < 1e-9 * gs[0].cwiseAbs().maxCoeff());
      }
      // Lag-0 equation: Gamma_0 = sum A_l Gamma_l^T + V.
      MatrixXd rhs0 = m.resid_cov().entries();
      for (std::size_t l = 1; l <= p; ++l) rhs0 += m.coeffs()[l - 1] * gs[l].transpose();
      CHECK((gs[0] - rhs0).cwiseAbs().maxCoeff() < 1e-9 * gs[0].cwiseAbs().maxCoeff());
    }
  }
}

TEST_CASE("simulation") {
  Rng a(5), b(5);
  const TimeSeries x = simulate_var(scalar(0.5), 500, 100, a, 2);
  const TimeSeries y = simulate_var(scalar(0.5), 500, 100, b, 2);
  CHECK(x.epochs.size() == 2);
  CHECK(x.epochs[0].rows() == 500);
  CHECK(x.epochs[0] == y.epochs[0]);
  CHECK(x.total_timepoints() == 1000);

  Rng c(6);
  const TimeSeries long_run = simulate_var(scalar(0.5), 1000000, 1000, c);
  const Eigen::VectorXd col = long_run.epochs[0].col(0);
  const double var = (col.array() - col.mean()).square().mean();
  CHECK(var == doctest::Approx(4.0 / 3.0).epsilon(0.02));

  Rng d(7);
  CHECK(kind_of([&] { simulate_var(scalar(1.2), 10, 10, d); }) == ErrorKind::UnstableSystem);
}

TEST_CASE("fitting") {
  Rng rng(8);
  const VarModel fit = fit_var(simulate_var(scalar(0.5), 100000, 500, rng), 1);
  CHECK(fit.coeffs()[0](0, 0) == doctest::Approx(0.5).epsilon(0.02));
  CHECK(fit.resid_cov()(0, 0) == doctest::Approx(1.0).epsilon(0.02));

  TimeSeries zeros{2, {MatrixXd::Zero(50, 2)}, {}};
  CHECK(kind_of([&] { fit_var(zeros, 1); }) == ErrorKind::RankDeficientRegressors);
  TimeSeries tiny{1, {MatrixXd::Ones(2, 1)}, {}};
  CHECK(kind_of([&] { fit_var(tiny, 1); }) == ErrorKind::TooShortEpoch);

  SUBCASE("error shrinks with more data") {
    const MatrixXd a = (MatrixXd(2, 2) << 0.4, 0.3, -0.2, 0.5).finished();
    const VarModel m({a}, CovMatrix((MatrixXd(2, 2) << 1, 0.3, 0.3, 0.5).finished()));
    double err[2];
    std::size_t lens[2] = {10000, 100000};
    for (int i = 0; i < 2; ++i) {
      double total = 0;
      for (std::uint64_t s = 0; s < 4; ++s) {
        Rng r(100 + s);
        total += (fit_var(simulate_var(m, lens[i], 500, r), 1).coeffs()[0] - a).cwiseAbs().maxCoeff();
      }
      err[i] = total / 4;
    }
    CHECK(err[1] < err[0]);
  }

  SUBCASE("epochs are fitted without crossing boundaries") {
    // Each epoch has its own offset; per-epoch demeaning removes it.
    Rng r(9);
    TimeSeries ts = simulate_var(scalar(0.6), 2000, 200, r, 10);
    for (std::size_t e = 0; e < ts.epochs.size(); ++e) ts.epochs[e].array() += 50.0 * static_cast<double>(e);
    CHECK(fit_var(ts, 1).coeffs()[0](0, 0) == doctest::Approx(0.6).epsilon(0.05));
  }
}

TEST_CASE("VAR TMI and PID") {
  CHECK(var_tmi(scalar(0.0)) == 0.0);
  CHECK(var_tmi(scalar(0.5)) == doctest::Approx(0.5 * std::log(4.0 / 3.0)).epsilon(1e-12));
  CHECK(var_tmi(scalar(0.9)) == doctest::Approx(0.5 * std::log(1.0 / 0.19)).epsilon(1e-12));

  const Partition halves(IndexSet{0}, IndexSet{1}, 2);
  const VarModel diag({0.5 * MatrixXd::Identity(2, 2)}, CovMatrix(MatrixXd::Identity(2, 2)));
  const PidAtoms d = var_pid(diag, halves);
  const double h = 0.5 * std::log(4.0 / 3.0);
  CHECK(d.tmi == doctest::Approx(2 * h).epsilon(1e-12));
  CHECK(d.red == doctest::Approx(h).epsilon(1e-12));
  CHECK(d.syn == doctest::Approx(h).epsilon(1e-12));
  CHECK(d.un_x == 0.0);

  const VarModel zero({MatrixXd::Zero(2, 2)}, CovMatrix(MatrixXd::Identity(2, 2)));
  CHECK(var_pid(zero, halves) == PidAtoms{});

  const VarModel anti({(MatrixXd(2, 2) << 0, 0.6, 0.6, 0).finished()}, CovMatrix(MatrixXd::Identity(2, 2)));
  const PidAtoms s = var_pid(anti, halves);
  CHECK(s.syn > 0.0);

  SUBCASE("agrees with the explicit past-future covariance") {
    Rng rng(12);
    for (int t = 0; t < 10; ++t) {
      const std::size_t n = 2 + t % 3, p = 1 + t % 2;
      const VarModel m = random_stable(n, p, 0.8, rng);
      const CovMatrix j = var_past_future_covariance(m);
      std::vector<int> past, future;
      for (std::size_t i = 0; i < n * p; ++i) past.push_back(static_cast<int>(i));
      for (std::size_t i = 0; i < n; ++i) future.push_back(static_cast<int>(n * p + i));
      CHECK(var_tmi(m) == doctest::Approx(oracle::schur_mi(j.entries(), past, future)).epsilon(1e-8));
      // Source X = variable 0 at every lag.
      std::vector<int> x;
      for (std::size_t l = 0; l < p; ++l) x.push_back(static_cast<int>(l * n));
      std::vector<std::size_t> rest;
      for (std::size_t v = 1; v < n; ++v) rest.push_back(v);
      const PidAtoms a = var_pid(m, Partition(IndexSet{0}, IndexSet(rest), n));
      const double ix = oracle::schur_mi(j.entries(), x, future);
      CHECK(a.red + a.un_x == doctest::Approx(ix).epsilon(1e-8));
    }
  }

  SUBCASE("simulation cross-check of the coupled model") {
    // Gaussian MI from the empirical covariance of (X_{t-1}, X_t).
    Rng rng(13);
    const TimeSeries ts = simulate_var(anti, 400000, 1000, rng);
    const MatrixXd& x = ts.epochs[0];
    const Eigen::Index n = x.rows() - 1;
    MatrixXd z(n, 4);
    z.leftCols(2) = x.topRows(n);
    z.rightCols(2) = x.bottomRows(n);
    const MatrixXd c = (z.rowwise() - z.colwise().mean()).transpose() * (z.rowwise() - z.colwise().mean()) /
                       static_cast<double>(n - 1);
    const double tmi_hat = oracle::schur_mi(c, {0, 1}, {2, 3});
    const double ix_hat = oracle::schur_mi(c, {0}, {2, 3});
    const double iy_hat = oracle::schur_mi(c, {1}, {2, 3});
    CHECK(s.tmi == doctest::Approx(tmi_hat).epsilon(0.02));
    CHECK(s.syn == doctest::Approx(tmi_hat - std::max(ix_hat, iy_hat)).epsilon(0.05));
  }

  CHECK(kind_of([] { var_tmi(scalar(1.0)); }) == ErrorKind::UnstableSystem);
}

TEST_CASE("partitions") {
  CHECK_NOTHROW(Partition(IndexSet{0, 2}, IndexSet{1}, 3));
  CHECK(kind_of([] { Partition(IndexSet{0}, IndexSet{0, 1}, 2); }) == ErrorKind::OverlappingIndexSets);
  CHECK(kind_of([] { Partition(IndexSet{}, IndexSet{0, 1}, 2); }) == ErrorKind::EmptyIndexSet);
  CHECK(kind_of([] { Partition(IndexSet{0}, IndexSet{2}, 3); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("VAR null model") {
  SUBCASE("sampler moments and replay") {
    Rng rng(14);
    MatrixXd vmean = MatrixXd::Zero(2, 2);
    double a2 = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      const NullVarParams p = sample_null_var(2, rng);
      vmean += p.v.entries() / n;
      a2 += p.a_raw(0, 1) * p.a_raw(0, 1) / n;
    }
    CHECK((vmean - 2 * MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 0.1);
    CHECK(a2 == doctest::Approx(1.0).epsilon(0.05));
    Rng r1(1), r2(1);
    CHECK(sample_null_var(3, r1).a_raw == sample_null_var(3, r2).a_raw);
  }

  SUBCASE("gain solver") {
    CHECK(solve_g_var(s1(1), CovMatrix(s1(1)), 0.5 * std::log(4.0 / 3.0)) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(solve_g_var(s1(-3), CovMatrix(s1(2)), 0.5 * std::log(4.0 / 3.0)) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(solve_g_var(s1(1), CovMatrix(s1(1)), 1e-10) < 1e-4);
    CHECK(kind_of([] { solve_g_var(s1(1), CovMatrix(s1(1)), 50.0); }) == ErrorKind::TargetUnreachable);
    CHECK(kind_of([] { solve_g_var(MatrixXd::Zero(2, 2), CovMatrix(MatrixXd::Identity(2, 2)), 0.1); }) ==
          ErrorKind::ZeroDynamics);

    Rng rng(15);
    for (int t = 0; t < 20; ++t) {
      const NullVarParams p = sample_null_var(3, rng);
      double prev = -1;
      for (double g = 0.05; g < 1.0; g += 0.05) {
        const double v = var_tmi(rescaled_var1(p.a_raw, p.v, g));
        CHECK(v > prev);
        prev = v;
      }
      const double g = solve_g_var(p.a_raw, p.v, 0.4);
      CHECK(std::abs(var_tmi(rescaled_var1(p.a_raw, p.v, g)) - 0.4) < 1e-9);
      CHECK(std::abs(spectral_radius(rescaled_var1(p.a_raw, p.v, g).coeffs()[0]) - g) < 1e-9);
    }
  }

  SUBCASE("ensembles") {
    const Partition part(IndexSet{0}, IndexSet{1, 2}, 3);
    const NullEnsemble e = build_null_ensemble_var(0.3, part, 40, 2, {.workers = 1});
    CHECK(e.family == NullFamily::Var);
    for (const auto& s : e.samples) CHECK(std::abs(s.tmi - 0.3) < 1e-6);
    CHECK(e.samples == build_null_ensemble_var(0.3, part, 40, 2, {.workers = 4}).samples);

    const VarModel zero({MatrixXd::Zero(3, 3)}, CovMatrix(MatrixXd::Identity(3, 3)));
    CHECK(kind_of([&] { numit_normalize_var(zero, part, 10, 1); }) == ErrorKind::ZeroTmi);
  }
}

TEST_CASE("residual-covariance scale invariance") {
  const Partition halves(IndexSet{0}, IndexSet{1}, 2);
  const VarModel anti({(MatrixXd(2, 2) << 0, 0.6, 0.6, 0).finished()},
                      CovMatrix((MatrixXd(2, 2) << 1, 0.2, 0.2, 2).finished()));
  const PidAtoms base = var_pid(anti, halves);
  const NormalizedAtoms q = numit_normalize_var(anti, halves, 100, 4, {.workers = 1});
  CHECK(q.syn_q > 0.5);
  for (double c : {0.1, 10.0}) {
    const VarModel scaled = anti.with_resid_cov(CovMatrix(c * anti.resid_cov().entries()));
    const PidAtoms a = var_pid(scaled, halves);
    CHECK(std::abs(a.tmi - base.tmi) < 1e-9);
    CHECK(std::abs(a.red - base.red) < 1e-9);
    CHECK(std::abs(a.syn - base.syn) < 1e-9);
    const NormalizedAtoms qs = numit_normalize_var(scaled, halves, 100, 4, {.workers = 1});
    CHECK(std::abs(qs.syn_q - q.syn_q) < 1e-9);
    CHECK(std::abs(qs.red_q - q.red_q) < 1e-9);
    CHECK(qs.syn_q > 0.5);
  }
}
