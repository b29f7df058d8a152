#ifndef IQRAT_PIPELINE_HPP
#define IQRAT_PIPELINE_HPP

#include <Eigen/Dense>
#include <array>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "iqrat/assoc.hpp"
#include "iqrat/combine.hpp"
#include "iqrat/qr_process.hpp"
#include "iqrat/scores.hpp"

namespace iqrat {

enum class Stratum { Common, Rare };

const char* stratum_name(Stratum s);

struct IqratOptions {
  Eigen::Index grid_size = 0;  // 0 = automatic (min(1000, max(100, n)))
  bool warm_start = true;
  double rare_beta_shape1 = 1.0, rare_beta_shape2 = 25.0;
  double common_beta_shape1 = 0.5, common_beta_shape2 = 0.5;
  LiuFallback liu_fallback = LiuFallback::KurtosisMatch;
};

// The covariate-only quantile process and integrated scores for one
// (phenotype, covariates) pair. Fitted once and shared read-only across all
// genes of a scan, since it does not involve the genotypes.
struct NullModel {
  Eigen::MatrixXd design;  // n x q, includes the intercept column
  NullQuantileFit fit;
  std::array<IntegratedScores, 3> integrated;  // Wilcoxon, Normal, Lehmann
  // empirical variance of each integrated-score vector; the test statistics
  // are studentized by this rather than the asymptotic constant, which keeps
  // the heavy-tailed Lehmann score calibrated at finite n
  std::array<double, 3> score_variance_hat{};
  Eigen::VectorXd ls_residuals;  // for the mean-based baselines
  double sigma2_hat = 0.0;
  Eigen::Index n = 0;
  Eigen::Index design_rank = 0;
};

NullModel fit_null_model(const Eigen::Ref<const Eigen::VectorXd>& y,
                         const Eigen::Ref<const Eigen::MatrixXd>& design,
                         const IqratOptions& options = {});

// Partition into common (MAF > 1/sqrt(2n)) and rare (MAF <= threshold).
std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>> stratify_variants(
    const GenotypeBlock& block, Eigen::Index n);

// X2 residualized against X1; columns of the result whose norm collapses
// (rare variant inside the common span) should be dropped by the caller.
Eigen::MatrixXd orthogonalize_strata(const Eigen::Ref<const Eigen::MatrixXd>& x_common,
                                     const Eigen::Ref<const Eigen::MatrixXd>& x_rare);

struct GeneTestReport {
  std::string gene_id;
  Eigen::Index n = 0, p_common = 0, p_rare = 0;

  struct Component {
    Stratum stratum;
    ScoreKind score;
    AssocResult result;  // statistic_kind QS or QB
  };
  std::vector<Component> components;

  std::optional<double> cauchy_common_qs, cauchy_rare_qs;
  std::optional<double> cauchy_common_qb, cauchy_rare_qb;
  std::optional<double> p_iqrat_qs, p_iqrat_qb;
  std::optional<double> baseline_skat_p, baseline_burden_p;
  std::vector<std::string> flags;

  const AssocResult* find(Stratum stratum, ScoreKind score, StatKind form) const;
};

// Full gene-level test: stratify, orthogonalize, test each (score, form)
// per stratum, Cauchy-combine across scores, Fisher-combine across strata,
// plus the mean-based SKAT/Burden baselines on the same design.
GeneTestReport iqrat_gene_test(const NullModel& null_model,
                               const GenotypeBlock& block,
                               const IqratOptions& options = {},
                               const std::string& gene_id = "");

struct MetaResult {
  std::optional<double> p_qs, p_qb;
  int studies_qs = 0, studies_qb = 0;
  std::vector<std::string> flags;
};

// Fisher combination of per-study final p-values for every gene present in
// at least one study; genes missing from some studies are combined over the
// available ones (df adjusted) and flagged.
std::map<std::string, MetaResult> meta_analyze(
    const std::vector<std::map<std::string, GeneTestReport>>& studies);

struct QuantileEffectProfile {
  Eigen::VectorXd levels;
  Eigen::VectorXd delta;    // high-mutation quantile minus reference quantile
  Eigen::VectorXd ci_low, ci_high;
  Eigen::Index n_high = 0, n_reference = 0;
};

// Sign of the marginal least-squares association of each variant with y,
// after projecting the covariates out of both.
Eigen::VectorXd variant_effect_signs(const Eigen::Ref<const Eigen::VectorXd>& y,
                                     const Eigen::Ref<const Eigen::MatrixXd>& covariates,
                                     const Eigen::Ref<const Eigen::MatrixXd>& x);

// Burden-score diagnostic: subjects whose signed weighted mutation burden
// (within common or within rare variants) exceeds the respective sample
// median form the high-mutation group; delta(tau) compares the empirical
// quantiles of the two groups with a within-group bootstrap band.
QuantileEffectProfile quantile_effect_profile(
    const Eigen::Ref<const Eigen::VectorXd>& y, const GenotypeBlock& block,
    const Eigen::Ref<const Eigen::VectorXd>& signs, const VariantWeights& w,
    int bootstrap_reps, const Eigen::Ref<const Eigen::VectorXd>& levels,
    std::uint64_t seed = 0);

}  // namespace iqrat

#endif
