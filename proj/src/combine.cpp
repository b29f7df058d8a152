#include "iqrat/combine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "iqrat/numerics.hpp"

namespace iqrat {

double cauchy_combine(const std::vector<double>& ps) {
  if (ps.empty()) throw std::invalid_argument("cauchy_combine: empty input");
  const double pi = M_PI;
  double t = 0.0;
  for (double p : ps) {
    if (!(p > 0.0 && p < 1.0)) {
      throw std::domain_error("cauchy_combine: p-values must lie in (0,1)");
    }
    // tan((0.5 - p) pi) = cot(p pi): the cotangent form keeps full
    // precision near both endpoints, and the asymptotic 1/(p pi) covers
    // the region where even p*pi rounds away
    if (p < 1e-15) {
      t += 1.0 / (p * pi);
    } else if (p < 0.5) {
      t += 1.0 / std::tan(p * pi);
    } else if (p > 0.5) {
      t -= 1.0 / std::tan((1.0 - p) * pi);
    }
  }
  t /= static_cast<double>(ps.size());

  // upper tail of the standard Cauchy; the reciprocal form keeps precision
  // for large |T| (and maps single inputs back exactly)
  if (t > 1.0) return std::atan(1.0 / t) / pi;
  if (t < -1.0) return 1.0 - std::atan(-1.0 / t) / pi;
  return 0.5 - std::atan(t) / pi;
}

double fisher_combine(const std::vector<double>& ps) {
  if (ps.empty()) throw std::invalid_argument("fisher_combine: empty input");
  double stat = 0.0;
  for (double p : ps) {
    if (!(p > 0.0 && p <= 1.0)) {
      throw std::domain_error("fisher_combine: p-values must lie in (0,1]");
    }
    stat -= 2.0 * std::log(p);
  }
  return chi2_sf(stat, 2.0 * static_cast<double>(ps.size()));
}

BhResult bh_fdr(const std::vector<double>& ps, double alpha) {
  if (ps.empty()) throw std::invalid_argument("bh_fdr: empty input");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::domain_error("bh_fdr: alpha must lie in (0,1)");
  }
  const size_t m = ps.size();
  std::vector<size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return ps[a] < ps[b]; });

  size_t k = 0;  // number of rejections
  for (size_t r = m; r >= 1; --r) {
    if (ps[order[r - 1]] <= alpha * static_cast<double>(r) / static_cast<double>(m)) {
      k = r;
      break;
    }
  }

  BhResult out;
  out.reject.assign(m, false);
  for (size_t r = 0; r < k; ++r) out.reject[order[r]] = true;
  if (k < m) out.threshold_p = ps[order[k]];
  return out;
}

}  // namespace iqrat
