#include "iqrat/assoc.hpp"

#include <cmath>
#include <stdexcept>

namespace iqrat {

namespace {
constexpr double kPvalueFloor = 1e-300;

double clamp_p(double p) {
  if (p < kPvalueFloor) return kPvalueFloor;
  if (p > 1.0) return 1.0;
  return p;
}
}  // namespace

const char* stat_name(StatKind kind) {
  switch (kind) {
    case StatKind::QS: return "qs";
    case StatKind::QB: return "qb";
    case StatKind::SKAT_mean: return "skat_mean";
    case StatKind::Burden_mean: return "burden_mean";
  }
  return "?";
}

Eigen::VectorXd compute_maf(const Eigen::Ref<const Eigen::MatrixXd>& matrix) {
  const double n = static_cast<double>(matrix.rows());
  if (n < 1) throw std::invalid_argument("compute_maf: empty matrix");
  Eigen::VectorXd f = matrix.colwise().sum() / (2.0 * n);
  return f.cwiseMin(Eigen::VectorXd::Ones(f.size()) - f);
}

GenotypeBlock build_genotype_block(Eigen::MatrixXd matrix,
                                   std::vector<std::string> variant_ids,
                                   std::vector<std::string>* dropped) {
  if (static_cast<size_t>(matrix.cols()) != variant_ids.size()) {
    throw std::invalid_argument("build_genotype_block: id count mismatch");
  }
  Eigen::VectorXd maf = compute_maf(matrix);

  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
    if (maf[j] > 0.0) {
      keep.push_back(j);
    } else if (dropped) {
      dropped->push_back(variant_ids[j]);
    }
  }

  GenotypeBlock block;
  block.matrix.resize(matrix.rows(), static_cast<Eigen::Index>(keep.size()));
  block.maf.resize(static_cast<Eigen::Index>(keep.size()));
  for (size_t j = 0; j < keep.size(); ++j) {
    block.matrix.col(static_cast<Eigen::Index>(j)) = matrix.col(keep[j]);
    block.maf[static_cast<Eigen::Index>(j)] = maf[keep[j]];
    block.variant_ids.push_back(variant_ids[keep[j]]);
  }
  return block;
}

VariantWeights beta_weights(const Eigen::Ref<const Eigen::VectorXd>& maf,
                            double shape1, double shape2) {
  if (!(shape1 > 0.0 && shape2 > 0.0)) {
    throw std::domain_error("beta_weights: shapes must be positive");
  }
  const double log_beta =
      std::lgamma(shape1) + std::lgamma(shape2) - std::lgamma(shape1 + shape2);
  VariantWeights out;
  out.w.resize(maf.size());
  for (Eigen::Index j = 0; j < maf.size(); ++j) {
    const double m = maf[j];
    if (!(m > 0.0 && m <= 0.5)) {
      throw std::logic_error("beta_weights: MAF must lie in (0, 0.5]");
    }
    out.w[j] = std::exp((shape1 - 1.0) * std::log(m) +
                        (shape2 - 1.0) * std::log1p(-m) - log_beta);
  }
  return out;
}

Eigen::VectorXd score_statistic(const Eigen::Ref<const Eigen::MatrixXd>& x_star,
                                const IntegratedScores& phi) {
  if (x_star.rows() != phi.values.size()) {
    throw std::logic_error("score_statistic: dimension mismatch");
  }
  const double n = static_cast<double>(x_star.rows());
  return x_star.transpose() * phi.values / std::sqrt(n);
}

std::pair<double, double> q_statistics(const Eigen::Ref<const Eigen::VectorXd>& s,
                                       const VariantWeights& w) {
  if (s.size() != w.w.size()) {
    throw std::logic_error("q_statistics: dimension mismatch");
  }
  const double qs = (w.w.array() * s.array()).square().sum();
  const double sum = (w.w.array() * s.array()).sum();
  return {qs, sum * sum};
}

Eigen::MatrixXd null_covariance(const Eigen::Ref<const Eigen::MatrixXd>& x_star) {
  const double n = static_cast<double>(x_star.rows());
  return x_star.transpose() * x_star / n;
}

double liu_tail_probability(double q, const SymSpectrum& lambdas,
                            LiuFallback fallback) {
  if (q < 0.0) throw std::domain_error("liu_tail_probability: q must be >= 0");
  const Eigen::VectorXd lam = lambdas.retained();
  if (lam.size() == 0) {
    throw std::runtime_error("liu_tail_probability: no positive eigenvalues");
  }

  const double c1 = lam.sum();
  const double c2 = lam.array().square().sum();
  const double c3 = lam.array().cube().sum();
  const double c4 = lam.array().pow(4).sum();
  const double s1 = c3 / std::pow(c2, 1.5);
  const double s2 = c4 / (c2 * c2);

  double df, ncp;
  // Equal eigenvalues give s1^2 == s2 exactly; route near-equality to the
  // central branch so the chi^2_p reduction is exact.
  if (s1 * s1 > s2 * (1.0 + 1e-12)) {
    const double a = 1.0 / (s1 - std::sqrt(s1 * s1 - s2));
    ncp = s1 * a * a * a - a * a;
    df = a * a - 2.0 * ncp;
  } else {
    ncp = 0.0;
    df = (fallback == LiuFallback::KurtosisMatch) ? 1.0 / s2
                                                  : (c2 * c2 * c2) / (c3 * c3);
  }

  const double mu_q = c1;
  const double sigma_q = std::sqrt(2.0 * c2);
  const double mu_chi = df + ncp;
  const double sigma_chi = std::sqrt(2.0 * (df + 2.0 * ncp));
  const double t_star = (q - mu_q) / sigma_q;
  double x = t_star * sigma_chi + mu_chi;
  if (x < 0.0) x = 0.0;
  return clamp_p(noncentral_chi2_sf(x, df, ncp));
}

AssocResult p_value_qs(double q_s, const SymSpectrum& wsw_spectrum,
                       double sigma2_phi) {
  SymSpectrum scaled;
  scaled.eigenvalues = sigma2_phi * wsw_spectrum.eigenvalues;
  scaled.rank_tolerance = sigma2_phi * wsw_spectrum.rank_tolerance;

  AssocResult out;
  out.statistic = q_s;
  out.statistic_kind = StatKind::QS;
  out.eigenvalues = scaled;
  out.p_value = liu_tail_probability(q_s, scaled);
  return out;
}

AssocResult p_value_qs(double q_s, const Eigen::Ref<const Eigen::MatrixXd>& sigma,
                       const VariantWeights& w, double sigma2_phi) {
  Eigen::MatrixXd wsw = w.w.asDiagonal() * sigma * w.w.asDiagonal();
  return p_value_qs(q_s, sym_eigenvalues(wsw), sigma2_phi);
}

AssocResult p_value_qb(double q_b, double lambda, double sigma2_phi) {
  if (!(lambda > 1e-12)) {
    throw std::runtime_error("p_value_qb: degenerate burden variance");
  }
  AssocResult out;
  out.statistic = q_b;
  out.statistic_kind = StatKind::QB;
  out.p_value = clamp_p(chi2_sf(q_b / (sigma2_phi * lambda), 1.0));
  return out;
}

AssocResult p_value_qb(double q_b, const Eigen::Ref<const Eigen::MatrixXd>& sigma,
                       const VariantWeights& w, double sigma2_phi) {
  const double lambda = w.w.dot(sigma * w.w);
  return p_value_qb(q_b, lambda, sigma2_phi);
}

std::pair<AssocResult, AssocResult> mean_based_baseline(
    const Eigen::Ref<const Eigen::VectorXd>& y,
    const Eigen::Ref<const Eigen::MatrixXd>& covariates,
    const Eigen::Ref<const Eigen::MatrixXd>& x, const VariantWeights& w) {
  const Eigen::Index n = y.size();
  if (x.rows() != n || covariates.rows() != n) {
    throw std::invalid_argument("mean_based_baseline: dimension mismatch");
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(covariates);
  const Eigen::Index q_rank = qr.rank();
  Eigen::VectorXd r = project_out(covariates, y);
  Eigen::MatrixXd x_star = project_out(covariates, x);
  const double sigma2_hat = r.squaredNorm() / static_cast<double>(n - q_rank);

  IntegratedScores pseudo;  // reuse the score-statistic contraction on r
  pseudo.values = r;
  Eigen::VectorXd s = score_statistic(x_star, pseudo);
  auto [q_skat, q_burden] = q_statistics(s, w);

  Eigen::MatrixXd sigma = null_covariance(x_star);
  Eigen::MatrixXd wsw = w.w.asDiagonal() * sigma * w.w.asDiagonal();

  AssocResult skat = p_value_qs(q_skat, sym_eigenvalues(wsw), sigma2_hat);
  skat.statistic_kind = StatKind::SKAT_mean;

  AssocResult burden = p_value_qb(q_burden, w.w.dot(sigma * w.w), sigma2_hat);
  burden.statistic_kind = StatKind::Burden_mean;

  return {skat, burden};
}

}  // namespace iqrat
