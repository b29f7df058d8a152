#include "iqrat/qr_process.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace iqrat {

namespace {

// Full-rank column subset of the design, chosen by pivoted QR. Columns are
// rescaled to unit max-abs for basis conditioning; coefficients are mapped
// back to the original layout (dropped columns get zero).
struct ReducedDesign {
  Eigen::MatrixXd z;               // n x k, scaled
  Eigen::VectorXd col_scale;       // k
  std::vector<Eigen::Index> cols;  // original column indices, ascending
  Eigen::Index q_original = 0;
};

ReducedDesign reduce_design(const Eigen::Ref<const Eigen::MatrixXd>& c) {
  ReducedDesign rd;
  rd.q_original = c.cols();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(c);
  const Eigen::Index rank = qr.rank();
  if (rank == 0) {
    throw std::invalid_argument("quantile fit: design has rank zero");
  }
  rd.cols.assign(qr.colsPermutation().indices().data(),
                 qr.colsPermutation().indices().data() + rank);
  std::sort(rd.cols.begin(), rd.cols.end());

  rd.z.resize(c.rows(), rank);
  rd.col_scale.resize(rank);
  for (Eigen::Index j = 0; j < rank; ++j) {
    double s = c.col(rd.cols[j]).cwiseAbs().maxCoeff();
    if (s == 0.0) s = 1.0;
    rd.col_scale[j] = s;
    rd.z.col(j) = c.col(rd.cols[j]) / s;
  }
  return rd;
}

double rho_tau(double u, double tau) { return u * (tau - (u < 0.0 ? 1.0 : 0.0)); }

// Primal simplex on min sum_i rho_tau(y_i - z_i' alpha). A vertex
// interpolates k = rank(z) observations (the basis); every other row sits on
// a signed side of the fit. Rows with exactly zero residual carry a sticky
// side, which is the bound status of the equivalent bounded-variable LP:
// together (basis, sides) certify optimality exactly, so heavily tied data
// does not confuse the stopping rule. Iterations walk to an adjacent vertex
// along the steepest descending edge, passing as many residual sign changes
// as keep the directional derivative negative (long step).
class QrSimplex {
 public:
  QrSimplex(const Eigen::MatrixXd& z, const Eigen::Ref<const Eigen::VectorXd>& y)
      : z_(z), y_(y), n_(z.rows()), k_(z.cols()), side_(n_, 1) {}

  void seed_basis() {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z_.transpose());
    basis_.assign(qr.colsPermutation().indices().data(),
                  qr.colsPermutation().indices().data() + k_);
    factor();
  }

  void set_basis(std::vector<Eigen::Index> basis) {
    basis_ = std::move(basis);
    factor();
  }

  const std::vector<Eigen::Index>& basis() const { return basis_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  const Eigen::VectorXd& residuals() const { return resid_; }

  void solve(double tau, Eigen::Index max_iter) {
    const double tol = 1e-9;
    bool bland = false;
    Eigen::Index stall = 0;
    Eigen::VectorXd w(n_), u(k_), s(k_), g(n_);
    std::vector<std::pair<double, Eigen::Index>> crossings;

    for (Eigen::Index iter = 0; iter < max_iter; ++iter) {
      // sides follow residual signs; exact zeros keep their sticky side
      for (Eigen::Index i = 0; i < n_; ++i) {
        if (resid_[i] > 0.0) side_[i] = 1;
        else if (resid_[i] < 0.0) side_[i] = -1;
      }
      for (Eigen::Index i = 0; i < n_; ++i) {
        w[i] = tau - (side_[i] < 0 ? 1.0 : 0.0);
      }
      for (Eigen::Index m = 0; m < k_; ++m) w[basis_[m]] = 0.0;
      u.noalias() = z_.transpose() * w;
      s.noalias() = inv_.transpose() * u;

      // leaving basis row: most violated dual bound (smallest row index
      // once pivoting stalls, Bland's rule)
      Eigen::Index leave = -1;
      double sigma = 0.0, best = tol;
      for (Eigen::Index m = 0; m < k_; ++m) {
        const double up = s[m] - (1.0 - tau);
        const double dn = -tau - s[m];
        const double v = std::max(up, dn);
        if (v <= tol) continue;
        if (bland) {
          if (leave < 0 || basis_[m] < basis_[leave]) {
            leave = m;
            sigma = up >= dn ? 1.0 : -1.0;
          }
        } else if (v > best) {
          best = v;
          leave = m;
          sigma = up >= dn ? 1.0 : -1.0;
        }
      }
      if (leave < 0) return;  // dual feasible with consistent sides: optimal

      g.noalias() = z_ * inv_.col(leave);
      if (sigma < 0.0) g = -g;
      const double g_eps = 1e-12 * std::max(1.0, g.cwiseAbs().maxCoeff());

      double slope = (sigma > 0.0 ? (1.0 - tau) - s[leave] : tau + s[leave]);

      // residual sign changes along the edge; a zero-residual row whose
      // sticky side conflicts with the direction is a crossing at t = 0
      // (a bound flip)
      crossings.clear();
      for (Eigen::Index i = 0; i < n_; ++i) {
        if (std::abs(g[i]) <= g_eps || is_basic(i)) continue;
        if (resid_[i] == 0.0) {
          if ((g[i] > 0.0 && side_[i] > 0) || (g[i] < 0.0 && side_[i] < 0)) {
            crossings.emplace_back(0.0, i);
          }
        } else {
          const double t = resid_[i] / g[i];
          if (t > 0.0) crossings.emplace_back(t, i);
        }
      }
      if (crossings.empty()) {
        throw std::runtime_error("quantile fit: unbounded descent direction");
      }
      auto cmp = [](const auto& a, const auto& b) { return a > b; };
      std::make_heap(crossings.begin(), crossings.end(), cmp);

      Eigen::Index enter = -1;
      double t_star = 0.0;
      passed_.clear();
      while (!crossings.empty() && slope < 0.0) {
        std::pop_heap(crossings.begin(), crossings.end(), cmp);
        const auto [t, i] = crossings.back();
        crossings.pop_back();
        slope += std::abs(g[i]);
        if (enter >= 0) passed_.push_back(enter);
        enter = i;
        t_star = t;
        if (bland) break;  // single-step rule while anti-cycling
      }
      if (enter < 0) {
        throw std::runtime_error("quantile fit: ratio test failed");
      }
      // strictly passed rows land on the far side of their crossing; this
      // also commits the bound flips of passed zero-residual rows
      for (Eigen::Index i : passed_) side_[i] = (g[i] > 0.0 ? -1 : 1);

      const Eigen::Index leaving_row = basis_[leave];
      basis_[leave] = enter;
      factor();
      // the leaving row moves to residual -t*sigma; when t* = 0 it stays at
      // zero, so its side must record the movement direction
      side_[leaving_row] = (sigma > 0.0 ? -1 : 1);
      if (t_star == 0.0) {
        ++stall;
        if (stall > 50) bland = true;
      } else {
        stall = 0;
      }
    }
    throw std::runtime_error("quantile fit: iteration limit reached");
  }

 private:
  bool is_basic(Eigen::Index i) const {
    for (Eigen::Index m = 0; m < k_; ++m) {
      if (basis_[m] == i) return true;
    }
    return false;
  }

  void factor() {
    Eigen::MatrixXd zh(k_, k_);
    Eigen::VectorXd yh(k_);
    for (Eigen::Index m = 0; m < k_; ++m) {
      zh.row(m) = z_.row(basis_[m]);
      yh[m] = y_[basis_[m]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(zh);
    if (!lu.isInvertible()) {
      throw std::runtime_error("quantile fit: singular basis");
    }
    inv_ = lu.inverse();
    alpha_.noalias() = inv_ * yh;
    resid_ = y_ - z_ * alpha_;
    // residuals inside the forward-error bound of the fitted value are
    // exact zeros of the underlying LP (interpolated data); without the
    // snap they would drive vanishing 1e-17-sized steps forever
    Eigen::VectorXd absfit = z_.cwiseAbs() * alpha_.cwiseAbs();
    constexpr double eps64 = 64.0 * std::numeric_limits<double>::epsilon();
    for (Eigen::Index i = 0; i < n_; ++i) {
      if (std::abs(resid_[i]) <= eps64 * (std::abs(y_[i]) + absfit[i])) {
        resid_[i] = 0.0;
      }
    }
    for (Eigen::Index m = 0; m < k_; ++m) resid_[basis_[m]] = 0.0;
  }

  const Eigen::MatrixXd& z_;
  Eigen::VectorXd y_;  // owned copy; callers may pass expressions
  Eigen::Index n_, k_;
  std::vector<Eigen::Index> basis_;
  std::vector<signed char> side_;
  std::vector<Eigen::Index> passed_;
  Eigen::MatrixXd inv_;  // inverse of the basis matrix
  Eigen::VectorXd alpha_, resid_;
};

Eigen::Index iteration_cap(const QuantileFitOptions& options, Eigen::Index n) {
  return options.max_iterations > 0 ? options.max_iterations : 100 * n + 1000;
}

Eigen::VectorXd expand_coefficients(const ReducedDesign& rd,
                                    const Eigen::VectorXd& alpha_scaled) {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(rd.q_original);
  for (size_t j = 0; j < rd.cols.size(); ++j) {
    full[rd.cols[j]] = alpha_scaled[static_cast<Eigen::Index>(j)] / rd.col_scale[j];
  }
  return full;
}

// Strict below-the-fit indicator. Interpolated rows reproduce the fitted
// value only up to round-off once coefficients are expanded back, so a tie
// window sized by the forward-error bound of the dot product keeps them on
// the "not below" branch, matching the exact-arithmetic convention.
bool below_fit(double y, double fitted, double abs_fitted) {
  const double tie = 64.0 * std::numeric_limits<double>::epsilon() *
                     (std::abs(y) + abs_fitted);
  return y < fitted - tie;
}

}  // namespace

QuantileGrid make_grid(Eigen::Index n, Eigen::Index requested) {
  if (n < 20) {
    throw std::invalid_argument("make_grid: need at least 20 observations");
  }
  Eigen::Index g = requested > 0
                       ? requested
                       : std::min<Eigen::Index>(1000, std::max<Eigen::Index>(100, n));
  if (g < 10) {
    throw std::invalid_argument("make_grid: grid must have at least 10 levels");
  }
  QuantileGrid grid;
  grid.levels.resize(g);
  for (Eigen::Index k = 0; k < g; ++k) {
    grid.levels[k] = static_cast<double>(k + 1) / static_cast<double>(g + 1);
  }
  return grid;
}

double check_loss(const Eigen::Ref<const Eigen::VectorXd>& y,
                  const Eigen::Ref<const Eigen::MatrixXd>& design,
                  const Eigen::Ref<const Eigen::VectorXd>& alpha, double tau) {
  Eigen::VectorXd r = y - design * alpha;
  double obj = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) obj += rho_tau(r[i], tau);
  return obj;
}

Eigen::VectorXd fit_quantile(const Eigen::Ref<const Eigen::VectorXd>& y,
                             const Eigen::Ref<const Eigen::MatrixXd>& design,
                             double tau, const QuantileFitOptions& options) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw std::domain_error("fit_quantile: tau must lie in (0,1)");
  }
  if (y.size() != design.rows()) {
    throw std::invalid_argument("fit_quantile: dimension mismatch");
  }
  ReducedDesign rd = reduce_design(design);
  QrSimplex simplex(rd.z, y);
  simplex.seed_basis();
  simplex.solve(tau, iteration_cap(options, y.size()));
  return expand_coefficients(rd, simplex.alpha());
}

NullQuantileFit fit_null_process(const Eigen::Ref<const Eigen::VectorXd>& y,
                                 const Eigen::Ref<const Eigen::MatrixXd>& design,
                                 const QuantileGrid& grid,
                                 const QuantileFitOptions& options) {
  if (y.size() != design.rows()) {
    throw std::invalid_argument("fit_null_process: dimension mismatch");
  }
  const Eigen::Index g = grid.size();
  ReducedDesign rd = reduce_design(design);
  QrSimplex simplex(rd.z, y);
  simplex.seed_basis();

  NullQuantileFit fit;
  fit.grid = grid;
  fit.coefficients.resize(g, design.cols());
  fit.below_counts.resize(g);

  const Eigen::Index cap = iteration_cap(options, y.size());
  for (Eigen::Index k = 0; k < g; ++k) {
    if (!options.warm_start && k > 0) simplex.seed_basis();
    simplex.solve(grid.levels[k], cap);

    fit.coefficients.row(k) = expand_coefficients(rd, simplex.alpha()).transpose();
    Eigen::VectorXd fitted = design * fit.coefficients.row(k).transpose();
    Eigen::VectorXd absfit = design.cwiseAbs() * fit.coefficients.row(k).transpose().cwiseAbs();
    Eigen::Index below = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      if (below_fit(y[i], fitted[i], absfit[i])) ++below;
    }
    fit.below_counts[k] = static_cast<int>(below);
  }
  return fit;
}

RankScoreMatrix rank_scores(const NullQuantileFit& fit,
                            const Eigen::Ref<const Eigen::VectorXd>& y,
                            const Eigen::Ref<const Eigen::MatrixXd>& design) {
  if (y.size() != design.rows() || design.cols() != fit.coefficients.cols()) {
    throw std::logic_error("rank_scores: dimensions do not match the fit");
  }
  const Eigen::Index n = y.size();
  const Eigen::Index g = fit.grid.size();
  RankScoreMatrix rs;
  rs.grid = fit.grid;
  rs.values.resize(n, g);
  for (Eigen::Index k = 0; k < g; ++k) {
    const double tau = fit.grid.levels[k];
    Eigen::VectorXd fitted = design * fit.coefficients.row(k).transpose();
    Eigen::VectorXd absfit = design.cwiseAbs() * fit.coefficients.row(k).transpose().cwiseAbs();
    for (Eigen::Index i = 0; i < n; ++i) {
      rs.values(i, k) = (below_fit(y[i], fitted[i], absfit[i]) ? 1.0 : 0.0) - tau;
    }
  }
  return rs;
}

}  // namespace iqrat
