#ifndef IQRAT_NUMERICS_HPP
#define IQRAT_NUMERICS_HPP

#include <Eigen/Dense>

namespace iqrat {

// Eigenvalues of a symmetric matrix, sorted descending. Values in
// [-rank_tolerance, 0) are clamped to zero so that near-singular Gram
// matrices do not leak negative round-off into downstream tail sums.
struct SymSpectrum {
  Eigen::VectorXd eigenvalues;  // descending
  double rank_tolerance = 0.0;

  // eigenvalues strictly above rank_tolerance
  Eigen::VectorXd retained() const;
};

double normal_pdf(double x);

// Phi(x) = P(N(0,1) <= x), accurate in both tails (erfc based).
double normal_cdf(double x);

// Inverse of normal_cdf on (0,1). |Phi(result) - u| <= 1e-12.
double normal_quantile(double u);

// P(chi^2_df > x) via the regularized upper incomplete gamma.
double chi2_sf(double x, double df);

// Upper tail of the noncentral chi-square: Poisson mixture of central
// chi-square tails, truncated once the remaining Poisson mass < 1e-14.
double noncentral_chi2_sf(double x, double df, double ncp);

SymSpectrum sym_eigenvalues(const Eigen::Ref<const Eigen::MatrixXd>& a);

// Residual of b after projecting out the column space of a, computed via
// column-pivoted QR so rank-deficient a is handled without forming inverses.
Eigen::MatrixXd project_out(const Eigen::Ref<const Eigen::MatrixXd>& a,
                            const Eigen::Ref<const Eigen::MatrixXd>& b);

}  // namespace iqrat

#endif
