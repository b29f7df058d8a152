#ifndef IQRAT_QR_PROCESS_HPP
#define IQRAT_QR_PROCESS_HPP

#include <Eigen/Dense>

namespace iqrat {

// Interior quantile levels 0 < tau_1 < ... < tau_G < 1, with implicit
// boundary knots at 0 and 1 used when integrating the rank-score process.
struct QuantileGrid {
  Eigen::VectorXd levels;

  Eigen::Index size() const { return levels.size(); }
};

// Equally spaced grid tau_k = k/(G+1). Default G = min(1000, max(100, n)).
QuantileGrid make_grid(Eigen::Index n, Eigen::Index requested = 0);

// Covariate-only quantile fits over a grid. Row k of coefficients is the
// coefficient vector at levels[k]; below_counts[k] = #{ y_i < c_i' alpha }.
struct NullQuantileFit {
  QuantileGrid grid;
  Eigen::MatrixXd coefficients;  // G x q
  Eigen::VectorXi below_counts;  // G
};

// Entry (i,k) = 1{ y_i < c_i' alpha(tau_k) } - tau_k.
struct RankScoreMatrix {
  Eigen::MatrixXd values;  // n x G
  QuantileGrid grid;
};

struct QuantileFitOptions {
  bool warm_start = true;
  // 0 = automatic cap scaled to the problem size
  Eigen::Index max_iterations = 0;
};

// Minimizes sum_i rho_tau(y_i - c_i' alpha) exactly (simplex on the
// equivalent LP, walking vertex solutions that interpolate rank(design)
// observations). Any optimal vertex may be returned when the optimum is
// not unique.
Eigen::VectorXd fit_quantile(const Eigen::Ref<const Eigen::VectorXd>& y,
                             const Eigen::Ref<const Eigen::MatrixXd>& design,
                             double tau,
                             const QuantileFitOptions& options = {});

NullQuantileFit fit_null_process(const Eigen::Ref<const Eigen::VectorXd>& y,
                                 const Eigen::Ref<const Eigen::MatrixXd>& design,
                                 const QuantileGrid& grid,
                                 const QuantileFitOptions& options = {});

RankScoreMatrix rank_scores(const NullQuantileFit& fit,
                            const Eigen::Ref<const Eigen::VectorXd>& y,
                            const Eigen::Ref<const Eigen::MatrixXd>& design);

// Objective sum_i rho_tau(y_i - c_i' alpha); exposed for optimality checks.
double check_loss(const Eigen::Ref<const Eigen::VectorXd>& y,
                  const Eigen::Ref<const Eigen::MatrixXd>& design,
                  const Eigen::Ref<const Eigen::VectorXd>& alpha, double tau);

}  // namespace iqrat

#endif
