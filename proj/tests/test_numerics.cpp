#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "iqrat/numerics.hpp"
#include "oracles.hpp"

using namespace iqrat;

TEST_CASE("normal_quantile matches the bisection oracle") {
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(normal_quantile(0.975) == doctest::Approx(oracle::normal_quantile(0.975)).epsilon(1e-9));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-6));
  CHECK(normal_quantile(0.001) == doctest::Approx(-3.090232).epsilon(1e-6));

  // |Phi(result) - u| <= 1e-12 across the range, and strictly increasing
  double prev = -1e300;
  for (double u : {1e-12, 1e-8, 1e-4, 0.01, 0.3, 0.5, 0.7, 0.99, 1 - 1e-7, 1 - 1e-12}) {
    const double x = normal_quantile(u);
    CHECK(std::abs(oracle::normal_cdf(x) - u) <= 1e-12);
    CHECK(x > prev);
    prev = x;
  }
  CHECK_THROWS_AS(normal_quantile(0.0), std::domain_error);
  CHECK_THROWS_AS(normal_quantile(1.0), std::domain_error);
  CHECK_THROWS_AS(normal_quantile(-0.2), std::domain_error);
}

TEST_CASE("normal_quantile composed with the CDF is the identity") {
  for (double x = -6.0; x <= 6.0; x += 0.37) {
    CHECK(normal_quantile(normal_cdf(x)) == doctest::Approx(x).epsilon(1e-9));
  }
}

TEST_CASE("normal_pdf") {
  CHECK(normal_pdf(0.0) == doctest::Approx(0.3989423).epsilon(1e-6));
  CHECK(normal_pdf(1.0) == doctest::Approx(0.2419707).epsilon(1e-6));
  CHECK(normal_pdf(1.0) == normal_pdf(-1.0));
  CHECK(normal_pdf(40.0) == 0.0);  // quiet underflow
}

TEST_CASE("chi2_sf against quadrature oracle and closed forms") {
  CHECK(chi2_sf(0.0, 3.0) == 1.0);
  CHECK(chi2_sf(3.841459, 1.0) == doctest::Approx(0.05).epsilon(1e-6));
  CHECK(chi2_sf(11.983, 4.0) == doctest::Approx(0.01747).epsilon(1e-3));
  CHECK(chi2_sf(11.983, 4.0) == doctest::Approx(oracle::chi2_sf(11.983, 4.0)).epsilon(1e-10));

  // df = 2 closed form exp(-x/2)
  for (double x : {0.1, 1.0, 3.7, 10.0, 40.0}) {
    CHECK(std::abs(chi2_sf(x, 2.0) - std::exp(-0.5 * x)) <= 1e-12);
  }
  // monotone decreasing in x
  CHECK(chi2_sf(5.0, 3.0) > chi2_sf(6.0, 3.0));
  // relative accuracy on a spread of cases
  for (double df : {0.5, 1.0, 7.0, 30.0}) {
    for (double x : {0.2, 2.0, 9.0, 55.0}) {
      const double got = chi2_sf(x, df);
      const double want = oracle::chi2_sf(x, df);
      CHECK(std::abs(got - want) <= 1e-10 * std::max(want, 1e-30) + 1e-14);
    }
  }
  CHECK_THROWS_AS(chi2_sf(-1.0, 2.0), std::domain_error);
  CHECK_THROWS_AS(chi2_sf(1.0, 0.0), std::domain_error);
}

TEST_CASE("noncentral_chi2_sf") {
  // ncp = 0 reduces exactly to the central tail
  for (double x : {0.5, 3.0, 12.0}) {
    CHECK(noncentral_chi2_sf(x, 3.0, 0.0) == chi2_sf(x, 3.0));
  }
  // MC oracle for (Z1 + sqrt(3))^2 + Z2^2 at x = 5
  {
    auto mc = oracle::mc_mixture_tail({1.0, 1.0}, 5.0, 10000000, 20240817u,
                                      {std::sqrt(3.0), 0.0});
    const double got = noncentral_chi2_sf(5.0, 2.0, 3.0);
    CHECK(std::abs(got - mc.estimate) <= 3.0 * mc.std_error);
  }
  // stochastic ordering in the noncentrality
  CHECK(noncentral_chi2_sf(5.0, 2.0, 3.0) > noncentral_chi2_sf(5.0, 2.0, 0.0));
  // large ncp exercises the modal-start recurrences; the tail at the mean
  // of the distribution must sit near one half
  {
    const double p = noncentral_chi2_sf(2002.0, 2.0, 2000.0);
    CHECK(p > 0.45);
    CHECK(p < 0.55);
    auto mc = oracle::mc_mixture_tail({1.0, 1.0}, 2002.0, 2000000, 99u,
                                      {std::sqrt(2000.0), 0.0});
    CHECK(std::abs(p - mc.estimate) <= 4.0 * mc.std_error);
  }
  CHECK_THROWS_AS(noncentral_chi2_sf(1.0, 2.0, -0.5), std::domain_error);
}

TEST_CASE("sym_eigenvalues") {
  Eigen::Matrix2d eye = Eigen::Matrix2d::Identity();
  auto spec = sym_eigenvalues(eye);
  CHECK(spec.eigenvalues[0] == doctest::Approx(1.0));
  CHECK(spec.eigenvalues[1] == doctest::Approx(1.0));

  Eigen::Matrix2d m;
  m << 2, 1, 1, 2;
  spec = sym_eigenvalues(m);
  CHECK(spec.eigenvalues[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(spec.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-12));

  // rank-1 spectrum (||v||^2, 0, ..., 0)
  Eigen::VectorXd v(4);
  v << 1, -2, 0.5, 3;
  spec = sym_eigenvalues(v * v.transpose());
  CHECK(spec.eigenvalues[0] == doctest::Approx(v.squaredNorm()).epsilon(1e-12));
  for (int j = 1; j < 4; ++j) CHECK(spec.eigenvalues[j] == 0.0);

  // trace consistency
  std::mt19937_64 gen(7);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd r(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) r(i, j) = nd(gen);
  Eigen::MatrixXd s = r + r.transpose();
  spec = sym_eigenvalues(s);
  CHECK(spec.eigenvalues.sum() ==
        doctest::Approx(s.trace()).epsilon(1e-8));

  Eigen::Matrix2d bad;
  bad << 1, 2, 0, 1;
  CHECK_THROWS_AS(sym_eigenvalues(bad), std::logic_error);
}

TEST_CASE("sym_eigenvalues is rotation invariant") {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd r(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) r(i, j) = nd(gen);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(r);
  Eigen::MatrixXd p = qr.householderQ();
  Eigen::VectorXd d(5);
  d << 9, 4, 1, 0.25, 0;
  auto spec = sym_eigenvalues(p.transpose() * d.asDiagonal() * p);
  for (int j = 0; j < 5; ++j) {
    CHECK(spec.eigenvalues[j] == doctest::Approx(d[j]).epsilon(1e-8));
  }
}

TEST_CASE("project_out") {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd;

  // centering against the all-ones column
  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(20, 1);
  Eigen::VectorXd b(20);
  for (int i = 0; i < 20; ++i) b[i] = nd(gen);
  Eigen::MatrixXd res = project_out(ones, b);
  CHECK((res.array() - (b.array() - b.mean())).abs().maxCoeff() <= 1e-12);

  // columns inside the span vanish
  Eigen::MatrixXd a(50, 3);
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = nd(gen);
  Eigen::MatrixXd inside = a * Eigen::MatrixXd::Random(3, 2);
  CHECK(project_out(a, inside).cwiseAbs().maxCoeff() <= 1e-10 * a.norm());

  // random case against the normal-equations oracle, column by column
  Eigen::MatrixXd bm(50, 5);
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 5; ++j) bm(i, j) = nd(gen);
  Eigen::MatrixXd got = project_out(a, bm);
  for (int j = 0; j < 5; ++j) {
    Eigen::VectorXd coef =
        (a.transpose() * a).ldlt().solve(a.transpose() * bm.col(j));
    Eigen::VectorXd want = bm.col(j) - a * coef;
    CHECK((got.col(j) - want).cwiseAbs().maxCoeff() <= 1e-8);
  }
  CHECK((a.transpose() * got).cwiseAbs().maxCoeff() <=
        1e-8 * a.norm() * bm.norm());

  // idempotence
  Eigen::MatrixXd twice = project_out(a, got);
  CHECK((twice - got).cwiseAbs().maxCoeff() <= 1e-8);

  // rank-deficient a (duplicated column) is handled by pivoting
  Eigen::MatrixXd adup(50, 4);
  adup << a, a.col(0);
  Eigen::MatrixXd res2 = project_out(adup, bm);
  CHECK((a.transpose() * res2).cwiseAbs().maxCoeff() <= 1e-8 * a.norm() * bm.norm());
}
