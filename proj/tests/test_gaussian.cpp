#include <doctest.h>

#include <cmath>
#include <random>

#include "numit/error.hpp"
#include "numit/gaussian.hpp"
#include "oracles.hpp"

using namespace numit;
using Eigen::MatrixXd;

namespace {

MatrixXd m2(double a, double b, double c, double d) {
  MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

GaussianPidSystem five(double g) {
  MatrixXd a(1, 2);
  a << 0.5, 0.5;
  return GaussianPidSystem(a, CovMatrix(m2(20, 10, 10, 20)), CovMatrix(MatrixXd::Identity(1, 1)), g, 1);
}

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::Io;
}

}  // namespace

TEST_CASE("index sets") {
  IndexSet s{3, 1, 2};
  CHECK(s.indices() == std::vector<std::size_t>{1, 2, 3});
  CHECK(s.max() == 3);
  CHECK(IndexSet::range(2, 3) == IndexSet{2, 3, 4});
  CHECK(s.intersects(IndexSet{3, 7}));
  CHECK_FALSE(s.intersects(IndexSet{0, 7}));
  CHECK(s.merged(IndexSet{0}) == IndexSet{0, 1, 2, 3});
  CHECK(kind_of([] { IndexSet{1, 1}; }) == ErrorKind::InvalidArgument);
}

TEST_CASE("log-determinant") {
  CHECK(spd_logdet(CovMatrix(MatrixXd::Identity(3, 3))) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(spd_logdet(CovMatrix(2.0 * MatrixXd::Identity(2, 2))) == doctest::Approx(2 * std::log(2.0)));
  CHECK(spd_logdet(CovMatrix(m2(20, 10, 10, 20))) == doctest::Approx(std::log(300.0)).epsilon(1e-14));

  SUBCASE("agrees with cofactor expansion") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
      const int d = 1 + trial % 4;
      const MatrixXd m = oracle::random_spd(d, rng);
      const double ref = std::log(oracle::cofactor_det(m));
      CHECK(std::abs(CovMatrix(m).logdet() - ref) <= 1e-9 * std::max(1.0, std::abs(ref)));
    }
  }
}

TEST_CASE("covariance validation") {
  CHECK(kind_of([] { CovMatrix(m2(1, 0.5, 0.4, 1)); }) == ErrorKind::NotSymmetric);
  CHECK(kind_of([] { CovMatrix(m2(1, 2, 2, 1)); }) == ErrorKind::CholeskyFailure);
  CHECK(kind_of([] { CovMatrix(MatrixXd(2, 3)); }) == ErrorKind::DimensionMismatch);
  // Singular in floating point but not beyond the jitter: accepted.
  const double e = 1e-17;
  CHECK_NOTHROW(CovMatrix(m2(1, 1 - e, 1 - e, 1)));
  // Indefinite by more than the jitter: rejected.
  CHECK(kind_of([] { CovMatrix(m2(1, 1, 1, 1) - 1e-6 * MatrixXd::Identity(2, 2)); }) ==
        ErrorKind::CholeskyFailure);

  const CovMatrix c(m2(4, 1, 1, 3));
  CHECK(c.sub(IndexSet{1}).entries()(0, 0) == 3.0);
  CHECK(kind_of([&] { c.sub(IndexSet{}); }) == ErrorKind::EmptyIndexSet);
  CHECK(kind_of([&] { c.sub(IndexSet{2}); }) == ErrorKind::IndexOutOfRange);
}

TEST_CASE("system construction") {
  MatrixXd a(1, 2);
  a << 1, 1;
  const CovMatrix s(MatrixXd::Identity(2, 2)), e(MatrixXd::Identity(1, 1));
  CHECK(kind_of([&] { GaussianPidSystem(a, s, e, 0.0, 1); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([&] { GaussianPidSystem(a, s, e, 1.0, 2); }) == ErrorKind::DimensionMismatch);
  CHECK(kind_of([&] { GaussianPidSystem(MatrixXd::Ones(1, 3), s, e, 1.0, 1); }) ==
        ErrorKind::DimensionMismatch);
  const auto sys = GaussianPidSystem(a, s, e, 1.0, 1);
  CHECK(sys.d_y == 1);
  CHECK(sys.target_indices() == IndexSet{2});
}

TEST_CASE("target and joint covariance") {
  CHECK(target_covariance(five(1)).entries()(0, 0) == doctest::Approx(16.0));
  CHECK(target_covariance(five(100)).entries()(0, 0) == doctest::Approx(115.0));

  MatrixXd expected(3, 3);
  expected << 20, 10, 15, 10, 20, 15, 15, 15, 16;
  const CovMatrix j = joint_covariance(five(1));
  CHECK((j.entries() - expected).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(j.entries().topLeftCorner(2, 2) == five(1).sigma_s.entries());

  const auto zero = GaussianPidSystem(MatrixXd::Zero(1, 2), CovMatrix(m2(20, 10, 10, 20)),
                                      CovMatrix(MatrixXd::Identity(1, 1)), 3.0, 1);
  CHECK(target_covariance(zero).entries()(0, 0) == 3.0);
  CHECK(joint_covariance(zero).entries().topRightCorner(2, 1).isZero());

  // Unit channel from one source; the second source is disconnected.
  MatrixXd a10(1, 2);
  a10 << 1, 0;
  const auto unit = GaussianPidSystem(a10, CovMatrix(MatrixXd::Identity(2, 2)), CovMatrix(MatrixXd::Identity(1, 1)),
                                      1.0, 1);
  MatrixXd ju(3, 3);
  ju << 1, 0, 1, 0, 1, 0, 1, 0, 2;
  CHECK(joint_covariance(unit).entries() == ju);
}

TEST_CASE("mutual information") {
  const CovMatrix j = joint_covariance(five(1));
  CHECK(gaussian_mi(j, IndexSet{0, 1}, IndexSet{2}) == doctest::Approx(0.5 * std::log(16.0)).epsilon(1e-12));
  CHECK(gaussian_mi(j, IndexSet{0}, IndexSet{2}) == doctest::Approx(0.5 * std::log(16.0 / 4.75)).epsilon(1e-12));
  CHECK(gaussian_mi(j, IndexSet{0}, IndexSet{2}) == doctest::Approx(0.6072).epsilon(1e-4));

  MatrixXd bd = MatrixXd::Zero(3, 3);
  bd.topLeftCorner(2, 2) = m2(20, 10, 10, 20);
  bd(2, 2) = 5;
  CHECK(gaussian_mi(CovMatrix(bd), IndexSet{0, 1}, IndexSet{2}) == 0.0);

  CHECK(kind_of([&] { gaussian_mi(j, IndexSet{0, 1}, IndexSet{1, 2}); }) == ErrorKind::OverlappingIndexSets);
  CHECK(kind_of([&] { gaussian_mi(j, IndexSet{}, IndexSet{2}); }) == ErrorKind::EmptyIndexSet);
  CHECK(kind_of([&] { gaussian_mi(j, IndexSet{0}, IndexSet{3}); }) == ErrorKind::IndexOutOfRange);

  SUBCASE("symmetry, non-negativity and the Schur-complement oracle") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
      const MatrixXd m = oracle::random_spd(4, rng, 0.01);
      const CovMatrix c(m);
      const IndexSet u{0, 2}, v{1, 3};
      const double uv = gaussian_mi(c, u, v);
      CHECK(std::abs(uv - gaussian_mi(c, v, u)) < 1e-12);
      CHECK(uv >= 0.0);
      CHECK(uv == doctest::Approx(oracle::schur_mi(m, {0, 2}, {1, 3})).epsilon(1e-8));
    }
  }
}

TEST_CASE("system TMI") {
  CHECK(system_tmi(five(1)) == doctest::Approx(0.5 * std::log(16.0)).epsilon(1e-12));
  CHECK(system_tmi(five(100)) == doctest::Approx(0.5 * std::log(1.15)).epsilon(1e-12));
  CHECK(system_tmi(five(100)) == doctest::Approx(0.0699).epsilon(1e-3));
  const auto zero = GaussianPidSystem(MatrixXd::Zero(1, 2), CovMatrix(m2(20, 10, 10, 20)),
                                      CovMatrix(MatrixXd::Identity(1, 1)), 1.0, 1);
  CHECK(system_tmi(zero) == 0.0);

  SUBCASE("matches the joint-covariance route and decreases in g") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n01;
    for (int trial = 0; trial < 20; ++trial) {
      MatrixXd a(2, 3);
      for (int i = 0; i < 6; ++i) a(i / 3, i % 3) = n01(rng);
      const auto sys = GaussianPidSystem(a, CovMatrix(oracle::random_spd(3, rng)),
                                         CovMatrix(oracle::random_spd(2, rng)), 1.0, 2);
      const auto spectrum = snr_spectrum(sys.a, sys.sigma_s, sys.sigma_eps);
      double prev = INFINITY;
      for (double g = 1.0; g <= 100.0; g *= 1.5) {
        const auto s = sys.with_gain(g);
        const double t = system_tmi(s);
        CHECK(std::abs(t - gaussian_mi(joint_covariance(s), s.source_indices(), s.target_indices())) < 1e-9);
        CHECK(std::abs(t - tmi_from_spectrum(spectrum, g)) < 1e-9);
        CHECK(t < prev);
        prev = t;
      }
    }
  }
}
