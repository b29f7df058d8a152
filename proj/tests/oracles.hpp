// Independent reference implementations used only by tests. These must not
// share code with the library paths they check: the normal CDF is erf-based,
// integrals use adaptive Simpson on the raw integrand, the chi-square tail
// integrates the density, and the quantile-fit oracle is a projected
// subgradient method.
#ifndef IQRAT_TEST_ORACLES_HPP
#define IQRAT_TEST_ORACLES_HPP

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

namespace oracle {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

// bisection inverse of the erf-based CDF
inline double normal_quantile(double u) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < u ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline double simpson(const std::function<double(double)>& f, double a, double b,
                      double fa, double fm, double fb, double whole, double tol,
                      int depth) {
  if (depth > 55) throw std::runtime_error("oracle quadrature failed");
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (std::abs(left + right - whole) <= 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
         simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  return simpson(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 0);
}

// chi-square upper tail by integrating the density from x out to where the
// remaining mass is negligible (avoids the t -> 0 singularity for df < 2)
inline double chi2_sf(double x, double df) {
  if (x <= 0.0) return 1.0;
  const double half = 0.5 * df;
  const double log_norm = -half * std::log(2.0) - std::lgamma(half);
  auto density = [&](double t) {
    if (t <= 0.0) return 0.0;
    return std::exp(log_norm + (half - 1.0) * std::log(t) - 0.5 * t);
  };
  const double xmax = std::max(4.0 * df + 100.0, x + 140.0);
  const double rough = integrate(density, x, xmax, 1e-10);
  return integrate(density, x, xmax, std::max(1e-16, 1e-13 * rough));
}

// Monte-Carlo tail of sum_j lambda_j Z_j^2 (or noncentral variants) with a
// plain std::mt19937_64 + std::normal_distribution sampler.
struct MixtureTail {
  double estimate = 0.0;
  double std_error = 0.0;
};

inline MixtureTail mc_mixture_tail(const std::vector<double>& lambdas, double q,
                                   std::size_t draws, std::uint64_t seed,
                                   const std::vector<double>& shifts = {}) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::size_t hits = 0;
  for (std::size_t d = 0; d < draws; ++d) {
    double s = 0.0;
    for (std::size_t j = 0; j < lambdas.size(); ++j) {
      double z = normal(gen) + (j < shifts.size() ? shifts[j] : 0.0);
      s += lambdas[j] * z * z;
    }
    if (s > q) ++hits;
  }
  MixtureTail out;
  out.estimate = static_cast<double>(hits) / static_cast<double>(draws);
  out.std_error = std::sqrt(out.estimate * (1.0 - out.estimate) /
                            static_cast<double>(draws));
  return out;
}

inline double rho_tau(double u, double tau) {
  return u * (tau - (u < 0.0 ? 1.0 : 0.0));
}

inline double quantile_loss(const Eigen::VectorXd& y, const Eigen::MatrixXd& c,
                            const Eigen::VectorXd& alpha, double tau) {
  Eigen::VectorXd r = y - c * alpha;
  double obj = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) obj += rho_tau(r[i], tau);
  return obj;
}

// Subgradient descent on the quantile loss with 1/sqrt(t) steps and
// best-iterate tracking; slow but entirely independent of the LP solver.
inline Eigen::VectorXd subgradient_quantile_fit(const Eigen::VectorXd& y,
                                                const Eigen::MatrixXd& c, double tau,
                                                int iterations = 60000) {
  Eigen::VectorXd alpha =
      (c.transpose() * c).ldlt().solve(c.transpose() * y);  // LS warm start
  Eigen::VectorXd best = alpha;
  double best_obj = quantile_loss(y, c, alpha, tau);
  const double scale = y.cwiseAbs().maxCoeff() + 1.0;
  for (int t = 1; t <= iterations; ++t) {
    Eigen::VectorXd r = y - c * alpha;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(c.cols());
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      g -= c.row(i).transpose() * (tau - (r[i] < 0.0 ? 1.0 : 0.0));
    }
    alpha -= (0.5 * scale / (std::sqrt(static_cast<double>(t)) * c.rows())) * g;
    const double obj = quantile_loss(y, c, alpha, tau);
    if (obj < best_obj) {
      best_obj = obj;
      best = alpha;
    }
  }
  return best;
}

// Kolmogorov-Smirnov statistic against a supplied CDF.
inline double ks_statistic(std::vector<double> values,
                           const std::function<double(double)>& cdf) {
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double f = cdf(values[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

// asymptotic KS critical value, c(alpha)/sqrt(n)
inline double ks_critical(double alpha, std::size_t n) {
  return std::sqrt(-0.5 * std::log(0.5 * alpha)) / std::sqrt(static_cast<double>(n));
}

}  // namespace oracle

#endif
