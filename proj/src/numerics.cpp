#include "iqrat/numerics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace iqrat {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;
constexpr double kSqrt2 = 1.4142135623730950488016887;

// Regularized lower incomplete gamma P(a,x) by its power series.
// Valid (fast) for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double term = sum;
  const int cap = 1000000;
  for (int n = 0; n < cap; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) {
      return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
  }
  throw std::runtime_error("incomplete gamma series did not converge");
}

// Regularized upper incomplete gamma Q(a,x) by continued fraction
// (modified Lentz). Valid for x >= a + 1.
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  const int cap = 1000000;
  for (int i = 1; i <= cap; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) {
      return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
  }
  throw std::runtime_error("incomplete gamma continued fraction did not converge");
}

double gamma_q(double a, double x) {
  if (x <= 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

}  // namespace

Eigen::VectorXd SymSpectrum::retained() const {
  Eigen::Index m = 0;
  while (m < eigenvalues.size() && eigenvalues[m] > rank_tolerance) ++m;
  return eigenvalues.head(m);
}

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) {
    throw std::domain_error("normal_quantile: argument must lie in (0,1)");
  }

  // Acklam's rational approximation (~1e-9 relative), then one Halley
  // step against the erfc-based CDF to reach full double accuracy.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (u < plow) {
    double q = std::sqrt(-2.0 * std::log(u));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (u <= 1.0 - plow) {
    double q = u - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log1p(-u));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  double e = normal_cdf(x) - u;
  double t = e / normal_pdf(x);
  x -= t / (1.0 + 0.5 * x * t);
  return x;
}

double chi2_sf(double x, double df) {
  if (x < 0.0 || !(df > 0.0)) {
    throw std::domain_error("chi2_sf: require x >= 0 and df > 0");
  }
  return gamma_q(0.5 * df, 0.5 * x);
}

double noncentral_chi2_sf(double x, double df, double ncp) {
  if (x < 0.0 || !(df > 0.0) || ncp < 0.0) {
    throw std::domain_error("noncentral_chi2_sf: require x >= 0, df > 0, ncp >= 0");
  }
  if (ncp == 0.0) return chi2_sf(x, df);
  if (x == 0.0) return 1.0;

  const double half_ncp = 0.5 * ncp;
  const double z = 0.5 * x;
  const long k0 = static_cast<long>(half_ncp);

  // Poisson weight and central tail at the modal index, then recur outward.
  // Q(a+1,z) = Q(a,z) + t(a) with t(a) = z^a e^{-z} / Gamma(a+1).
  const double log_w0 =
      -half_ncp + k0 * std::log(half_ncp) - std::lgamma(static_cast<double>(k0) + 1.0);
  const double w0 = std::exp(log_w0);
  const double a0 = 0.5 * df + static_cast<double>(k0);
  const double q0 = gamma_q(a0, z);
  const double log_t0 = -z + a0 * std::log(z) - std::lgamma(a0 + 1.0);
  const double t0 = std::exp(log_t0);

  double sum = w0 * q0;
  const long cap = 1000000;

  // Expand outward from the modal index on both sides at once so the
  // truncation criterion sees the full remaining Poisson mass. Mass is
  // accumulated with compensated summation; the rule stops once the
  // remaining mass is below 1e-14.
  double mass = w0, mass_c = 0.0;
  auto add_mass = [&](double w) {
    double t = w - mass_c;
    double next = mass + t;
    mass_c = (next - mass) - t;
    mass = next;
  };

  double wu = w0, qu = q0, tu = t0, au = a0;
  long ku = k0;
  double wd = w0, qd = q0, td = t0, ad = a0;
  long kd = k0;

  long steps = 0;
  while (1.0 - mass >= 1e-14) {
    if (++steps > cap) {
      throw std::runtime_error("noncentral_chi2_sf: Poisson mixture did not converge");
    }
    // one step up: k -> k+1
    qu += tu;
    if (qu > 1.0) qu = 1.0;
    wu *= half_ncp / static_cast<double>(ku + 1);
    ++ku;
    sum += wu * qu;
    add_mass(wu);
    au += 1.0;
    tu *= z / au;
    // one step down: k -> k-1 (while available)
    if (kd > 0) {
      td *= ad / z;  // t(a-1) = t(a) * a / z
      ad -= 1.0;
      qd -= td;
      if (qd < 0.0) qd = 0.0;
      wd *= static_cast<double>(kd) / half_ncp;
      --kd;
      sum += wd * qd;
      add_mass(wd);
    }
    // both frontiers decayed below double resolution: the true remaining
    // Poisson mass is under the threshold even if the float sum stalls
    if (wu < 1e-20 && (kd == 0 || wd < 1e-20)) break;
  }
  if (sum < 0.0) sum = 0.0;
  if (sum > 1.0) sum = 1.0;
  return sum;
}

SymSpectrum sym_eigenvalues(const Eigen::Ref<const Eigen::MatrixXd>& a) {
  if (a.rows() != a.cols()) {
    throw std::logic_error("sym_eigenvalues: matrix must be square");
  }
  const double scale = a.cwiseAbs().maxCoeff();
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(scale, 1e-300)) {
    throw std::logic_error("sym_eigenvalues: matrix is not symmetric within tolerance");
  }

  Eigen::MatrixXd s = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("sym_eigenvalues: eigensolver failed");
  }

  SymSpectrum out;
  out.eigenvalues = solver.eigenvalues().reverse();
  const double lmax = out.eigenvalues.size() > 0 ? out.eigenvalues[0] : 0.0;
  out.rank_tolerance = std::max(1e-12, 1e-10 * std::abs(lmax));
  for (Eigen::Index i = 0; i < out.eigenvalues.size(); ++i) {
    if (std::abs(out.eigenvalues[i]) <= out.rank_tolerance) {
      out.eigenvalues[i] = 0.0;
    }
  }
  return out;
}

Eigen::MatrixXd project_out(const Eigen::Ref<const Eigen::MatrixXd>& a,
                            const Eigen::Ref<const Eigen::MatrixXd>& b) {
  if (a.rows() != b.rows()) {
    throw std::logic_error("project_out: row counts differ");
  }
  if (a.cols() == 0) return b;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::Index rank = qr.rank();
  if (rank == 0) return b;

  Eigen::MatrixXd q1 =
      qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), rank);
  return b - q1 * (q1.transpose() * b);
}

}  // namespace iqrat
