#ifndef IQRAT_ASSOC_HPP
#define IQRAT_ASSOC_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "iqrat/numerics.hpp"
#include "iqrat/scores.hpp"

namespace iqrat {

// Dosage matrix for one gene/region. Entries lie in [0,2]; monomorphic
// columns must be removed before testing (build_genotype_block does this).
struct GenotypeBlock {
  Eigen::MatrixXd matrix;                // n x p
  std::vector<std::string> variant_ids;  // p
  Eigen::VectorXd maf;                   // p, in (0, 0.5]
};

// Drops monomorphic columns and fills in MAF. Dropped variant ids are
// appended to dropped (when given).
GenotypeBlock build_genotype_block(Eigen::MatrixXd matrix,
                                   std::vector<std::string> variant_ids,
                                   std::vector<std::string>* dropped = nullptr);

// maf_j = min(f_j, 1 - f_j) with f_j the dosage allele frequency.
Eigen::VectorXd compute_maf(const Eigen::Ref<const Eigen::MatrixXd>& matrix);

struct VariantWeights {
  Eigen::VectorXd w;  // positive, finite
};

// Beta(shape1, shape2) density evaluated at each MAF.
VariantWeights beta_weights(const Eigen::Ref<const Eigen::VectorXd>& maf,
                            double shape1, double shape2);

enum class StatKind { QS, QB, SKAT_mean, Burden_mean };

const char* stat_name(StatKind kind);

struct AssocResult {
  double statistic = 0.0;
  double p_value = 1.0;
  SymSpectrum eigenvalues;  // empty for the Burden forms
  std::optional<ScoreKind> score_kind;
  StatKind statistic_kind = StatKind::QS;
};

// S_j = n^{-1/2} sum_i X*_{ij} phi_i
Eigen::VectorXd score_statistic(const Eigen::Ref<const Eigen::MatrixXd>& x_star,
                                const IntegratedScores& phi);

// (Q_S, Q_B) = (sum_j w_j^2 S_j^2, (sum_j w_j S_j)^2)
std::pair<double, double> q_statistics(const Eigen::Ref<const Eigen::VectorXd>& s,
                                       const VariantWeights& w);

// Sigma = n^{-1} X*' X*
Eigen::MatrixXd null_covariance(const Eigen::Ref<const Eigen::MatrixXd>& x_star);

// Which degree-of-freedom convention the gamma = 0 fallback of the moment
// match uses; KurtosisMatch (df = 1/s2) is the production default.
enum class LiuFallback { KurtosisMatch, SkewnessMatch };

// Tail probability of sum_j lambda_j chi^2_1 at q by matching moments of a
// noncentral chi-square surrogate. Result clamped to (1e-300, 1].
double liu_tail_probability(double q, const SymSpectrum& lambdas,
                            LiuFallback fallback = LiuFallback::KurtosisMatch);

// Mixture-chi-square p-value for Q_S; the null spectrum is sigma2_phi times
// the eigenvalues of W Sigma W (same nonzero spectrum as
// Sigma^{1/2} W^2 Sigma^{1/2}); only eigenvalues above the rank tolerance
// are retained.
AssocResult p_value_qs(double q_s, const Eigen::Ref<const Eigen::MatrixXd>& sigma,
                       const VariantWeights& w, double sigma2_phi);

// Same with a precomputed unscaled spectrum of W Sigma W.
AssocResult p_value_qs(double q_s, const SymSpectrum& wsw_spectrum,
                       double sigma2_phi);

// Scaled chi^2_1 p-value for Q_B with lambda = 1' W Sigma W 1.
AssocResult p_value_qb(double q_b, const Eigen::Ref<const Eigen::MatrixXd>& sigma,
                       const VariantWeights& w, double sigma2_phi);

AssocResult p_value_qb(double q_b, double lambda, double sigma2_phi);

// Mean-based SKAT and Burden on least-squares residuals of y on the
// covariates; returns (SKAT_mean, Burden_mean).
std::pair<AssocResult, AssocResult> mean_based_baseline(
    const Eigen::Ref<const Eigen::VectorXd>& y,
    const Eigen::Ref<const Eigen::MatrixXd>& covariates,
    const Eigen::Ref<const Eigen::MatrixXd>& x, const VariantWeights& w);

}  // namespace iqrat

#endif
