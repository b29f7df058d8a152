#include "iqrat/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "iqrat/rng.hpp"

namespace iqrat {

namespace {

constexpr double kCauchyInputCap = 1.0 - 1e-16;

double clamp_for_cauchy(double p) {
  return std::min(std::max(p, 1e-300), kCauchyInputCap);
}

// empirical quantile, linear interpolation between order statistics
double empirical_quantile(std::vector<double>& sorted, double tau) {
  const size_t n = sorted.size();
  const double h = (static_cast<double>(n) - 1.0) * tau;
  const size_t lo = static_cast<size_t>(h);
  const size_t hi = std::min(lo + 1, n - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return empirical_quantile(v, 0.5);
}

}  // namespace

const char* stratum_name(Stratum s) {
  return s == Stratum::Common ? "common" : "rare";
}

NullModel fit_null_model(const Eigen::Ref<const Eigen::VectorXd>& y,
                         const Eigen::Ref<const Eigen::MatrixXd>& design,
                         const IqratOptions& options) {
  if (y.size() < 20) {
    throw std::invalid_argument("fit_null_model: need at least 20 observations");
  }
  NullModel model;
  model.design = design;
  model.n = y.size();

  QuantileGrid grid = make_grid(y.size(), options.grid_size);
  QuantileFitOptions fit_options;
  fit_options.warm_start = options.warm_start;
  model.fit = fit_null_process(y, design, grid, fit_options);

  RankScoreMatrix rs = rank_scores(model.fit, y, design);
  model.integrated[0] = integrate_rank_scores(rs, {ScoreKind::Wilcoxon});
  model.integrated[1] = integrate_rank_scores(rs, {ScoreKind::NormalScore});
  model.integrated[2] = integrate_rank_scores(rs, {ScoreKind::Lehmann});
  for (int s = 0; s < 3; ++s) {
    const Eigen::VectorXd& v = model.integrated[s].values;
    model.score_variance_hat[s] =
        (v.array() - v.mean()).square().sum() / static_cast<double>(model.n);
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  model.design_rank = qr.rank();
  model.ls_residuals = project_out(design, y);
  model.sigma2_hat = model.ls_residuals.squaredNorm() /
                     static_cast<double>(model.n - model.design_rank);
  return model;
}

std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>> stratify_variants(
    const GenotypeBlock& block, Eigen::Index n) {
  const double threshold = 1.0 / std::sqrt(2.0 * static_cast<double>(n));
  std::vector<Eigen::Index> common, rare;
  for (Eigen::Index j = 0; j < block.maf.size(); ++j) {
    if (block.maf[j] > threshold) {
      common.push_back(j);
    } else {
      rare.push_back(j);
    }
  }
  return {common, rare};
}

Eigen::MatrixXd orthogonalize_strata(const Eigen::Ref<const Eigen::MatrixXd>& x_common,
                                     const Eigen::Ref<const Eigen::MatrixXd>& x_rare) {
  if (x_common.cols() == 0) return x_rare;
  return project_out(x_common, x_rare);
}

const AssocResult* GeneTestReport::find(Stratum stratum, ScoreKind score,
                                        StatKind form) const {
  for (const auto& c : components) {
    if (c.stratum == stratum && c.score == score &&
        c.result.statistic_kind == form) {
      return &c.result;
    }
  }
  return nullptr;
}

namespace {

struct StratumData {
  Stratum stratum;
  std::vector<Eigen::Index> block_cols;  // into the original block
  Eigen::MatrixXd x_star;                // covariate-orthogonalized columns
  VariantWeights weights;
};

// Cauchy across scores then Fisher across strata, per form.
void combine_report(GeneTestReport& report) {
  auto cauchy_for = [&](Stratum stratum, StatKind form) -> std::optional<double> {
    std::vector<double> ps;
    for (const auto& c : report.components) {
      if (c.stratum == stratum && c.result.statistic_kind == form) {
        ps.push_back(clamp_for_cauchy(c.result.p_value));
      }
    }
    if (ps.empty()) return std::nullopt;
    return cauchy_combine(ps);
  };

  report.cauchy_common_qs = cauchy_for(Stratum::Common, StatKind::QS);
  report.cauchy_rare_qs = cauchy_for(Stratum::Rare, StatKind::QS);
  report.cauchy_common_qb = cauchy_for(Stratum::Common, StatKind::QB);
  report.cauchy_rare_qb = cauchy_for(Stratum::Rare, StatKind::QB);

  auto fisher_for = [](const std::optional<double>& a,
                       const std::optional<double>& b) -> std::optional<double> {
    std::vector<double> ps;
    if (a) ps.push_back(std::max(*a, 1e-300));
    if (b) ps.push_back(std::max(*b, 1e-300));
    if (ps.empty()) return std::nullopt;
    if (ps.size() == 1) return ps[0];
    return fisher_combine(ps);
  };
  report.p_iqrat_qs = fisher_for(report.cauchy_common_qs, report.cauchy_rare_qs);
  report.p_iqrat_qb = fisher_for(report.cauchy_common_qb, report.cauchy_rare_qb);
}

}  // namespace

GeneTestReport iqrat_gene_test(const NullModel& null_model,
                               const GenotypeBlock& block,
                               const IqratOptions& options,
                               const std::string& gene_id) {
  GeneTestReport report;
  report.gene_id = gene_id;
  report.n = null_model.n;
  if (block.matrix.rows() != null_model.n) {
    throw std::invalid_argument("iqrat_gene_test: sample sizes differ");
  }

  auto [common_idx, rare_idx] = stratify_variants(block, null_model.n);

  Eigen::MatrixXd x_common(null_model.n, static_cast<Eigen::Index>(common_idx.size()));
  for (size_t j = 0; j < common_idx.size(); ++j) {
    x_common.col(static_cast<Eigen::Index>(j)) = block.matrix.col(common_idx[j]);
  }
  Eigen::MatrixXd x_rare(null_model.n, static_cast<Eigen::Index>(rare_idx.size()));
  for (size_t j = 0; j < rare_idx.size(); ++j) {
    x_rare.col(static_cast<Eigen::Index>(j)) = block.matrix.col(rare_idx[j]);
  }

  // rare columns lying in the common span vanish after orthogonalization
  Eigen::MatrixXd x_rare_tilde = orthogonalize_strata(x_common, x_rare);
  std::vector<Eigen::Index> rare_kept;
  for (Eigen::Index j = 0; j < x_rare_tilde.cols(); ++j) {
    const double before = x_rare.col(j).norm();
    if (x_rare_tilde.col(j).norm() > 1e-8 * std::max(before, 1e-300)) {
      rare_kept.push_back(j);
    } else {
      report.flags.push_back("dropped_collinear_rare:" +
                             block.variant_ids[rare_idx[static_cast<size_t>(j)]]);
    }
  }
  if (rare_kept.size() != static_cast<size_t>(x_rare_tilde.cols())) {
    Eigen::MatrixXd kept(null_model.n, static_cast<Eigen::Index>(rare_kept.size()));
    std::vector<Eigen::Index> kept_idx;
    for (size_t j = 0; j < rare_kept.size(); ++j) {
      kept.col(static_cast<Eigen::Index>(j)) = x_rare_tilde.col(rare_kept[j]);
      kept_idx.push_back(rare_idx[static_cast<size_t>(rare_kept[j])]);
    }
    x_rare_tilde = std::move(kept);
    rare_idx = std::move(kept_idx);
  }

  report.p_common = x_common.cols();
  report.p_rare = x_rare_tilde.cols();
  if (report.p_common == 0) report.flags.push_back("empty_common_stratum");
  if (report.p_rare == 0) report.flags.push_back("empty_rare_stratum");
  if (report.p_common + report.p_rare == 0) {
    report.flags.push_back("gene_skipped_no_testable_variants");
    return report;
  }

  // one covariate projection for the combined design, then split per stratum
  Eigen::MatrixXd combined(null_model.n, report.p_common + report.p_rare);
  if (report.p_common > 0) combined.leftCols(report.p_common) = x_common;
  if (report.p_rare > 0) combined.rightCols(report.p_rare) = x_rare_tilde;
  Eigen::MatrixXd combined_star = project_out(null_model.design, combined);

  std::vector<StratumData> strata;
  if (report.p_common > 0) {
    StratumData s;
    s.stratum = Stratum::Common;
    s.block_cols = common_idx;
    s.x_star = combined_star.leftCols(report.p_common);
    Eigen::VectorXd maf(report.p_common);
    for (Eigen::Index j = 0; j < report.p_common; ++j) maf[j] = block.maf[common_idx[j]];
    s.weights = beta_weights(maf, options.common_beta_shape1, options.common_beta_shape2);
    strata.push_back(std::move(s));
  }
  if (report.p_rare > 0) {
    StratumData s;
    s.stratum = Stratum::Rare;
    s.block_cols = rare_idx;
    s.x_star = combined_star.rightCols(report.p_rare);
    Eigen::VectorXd maf(report.p_rare);
    for (Eigen::Index j = 0; j < report.p_rare; ++j) maf[j] = block.maf[rare_idx[j]];
    s.weights = beta_weights(maf, options.rare_beta_shape1, options.rare_beta_shape2);
    strata.push_back(std::move(s));
  }

  for (const auto& s : strata) {
    Eigen::MatrixXd sigma = null_covariance(s.x_star);
    Eigen::MatrixXd wsw = s.weights.w.asDiagonal() * sigma * s.weights.w.asDiagonal();
    SymSpectrum spectrum = sym_eigenvalues(wsw);
    const double lambda_b = s.weights.w.dot(sigma * s.weights.w);

    // Lehmann weights extreme upper quantiles, where rare variants carry
    // no information; it is only applied to the common stratum
    std::vector<ScoreKind> kinds = {ScoreKind::Wilcoxon, ScoreKind::NormalScore};
    if (s.stratum == Stratum::Common) kinds.push_back(ScoreKind::Lehmann);

    for (ScoreKind kind : kinds) {
      const IntegratedScores& phi = null_model.integrated[static_cast<int>(kind)];
      const double sigma2_phi = null_model.score_variance_hat[static_cast<int>(kind)];
      Eigen::VectorXd stat = score_statistic(s.x_star, phi);
      auto [qs, qb] = q_statistics(stat, s.weights);
      try {
        AssocResult r = p_value_qs(qs, spectrum, sigma2_phi);
        r.score_kind = kind;
        report.components.push_back({s.stratum, kind, std::move(r)});
      } catch (const std::runtime_error&) {
        report.flags.push_back(std::string("degenerate_qs_") + stratum_name(s.stratum) +
                               "_" + score_name(kind));
      }
      try {
        AssocResult r = p_value_qb(qb, lambda_b, sigma2_phi);
        r.score_kind = kind;
        report.components.push_back({s.stratum, kind, std::move(r)});
      } catch (const std::runtime_error&) {
        report.flags.push_back(std::string("degenerate_qb_") + stratum_name(s.stratum) +
                               "_" + score_name(kind));
      }
    }
  }

  combine_report(report);

  // Mean-based baselines on the same orthogonalized design and weights,
  // stratified the same way the quantile tests are (per-stratum statistics
  // combined across strata by Fisher): the mean-based counterpart of the
  // common/rare combination used throughout.
  {
    std::vector<double> skat_ps, burden_ps;
    IntegratedScores pseudo;
    pseudo.values = null_model.ls_residuals;
    for (const auto& s : strata) {
      try {
        Eigen::VectorXd stat = score_statistic(s.x_star, pseudo);
        auto [q_skat, q_burden] = q_statistics(stat, s.weights);
        Eigen::MatrixXd sigma = null_covariance(s.x_star);
        Eigen::MatrixXd wsw =
            s.weights.w.asDiagonal() * sigma * s.weights.w.asDiagonal();
        AssocResult skat =
            p_value_qs(q_skat, sym_eigenvalues(wsw), null_model.sigma2_hat);
        skat_ps.push_back(std::max(skat.p_value, 1e-300));
        AssocResult burden = p_value_qb(q_burden, s.weights.w.dot(sigma * s.weights.w),
                                        null_model.sigma2_hat);
        burden_ps.push_back(std::max(burden.p_value, 1e-300));
      } catch (const std::runtime_error&) {
        report.flags.push_back(std::string("degenerate_mean_baseline_") +
                               stratum_name(s.stratum));
      }
    }
    if (!skat_ps.empty()) {
      report.baseline_skat_p =
          skat_ps.size() == 1 ? skat_ps[0] : fisher_combine(skat_ps);
    }
    if (!burden_ps.empty()) {
      report.baseline_burden_p =
          burden_ps.size() == 1 ? burden_ps[0] : fisher_combine(burden_ps);
    }
  }

  return report;
}

std::map<std::string, MetaResult> meta_analyze(
    const std::vector<std::map<std::string, GeneTestReport>>& studies) {
  if (studies.empty()) {
    throw std::invalid_argument("meta_analyze: no studies");
  }
  std::map<std::string, MetaResult> out;
  std::vector<std::string> genes;
  for (const auto& study : studies) {
    for (const auto& [gene, report] : study) genes.push_back(gene);
  }
  std::sort(genes.begin(), genes.end());
  genes.erase(std::unique(genes.begin(), genes.end()), genes.end());

  for (const auto& gene : genes) {
    MetaResult meta;
    std::vector<double> ps_qs, ps_qb;
    for (const auto& study : studies) {
      auto it = study.find(gene);
      if (it == study.end()) continue;
      if (it->second.p_iqrat_qs) ps_qs.push_back(std::max(*it->second.p_iqrat_qs, 1e-300));
      if (it->second.p_iqrat_qb) ps_qb.push_back(std::max(*it->second.p_iqrat_qb, 1e-300));
    }
    meta.studies_qs = static_cast<int>(ps_qs.size());
    meta.studies_qb = static_cast<int>(ps_qb.size());
    if (meta.studies_qs < static_cast<int>(studies.size())) {
      meta.flags.push_back("missing_in_some_studies");
    }
    if (!ps_qs.empty()) {
      meta.p_qs = ps_qs.size() == 1 ? ps_qs[0] : fisher_combine(ps_qs);
    }
    if (!ps_qb.empty()) {
      meta.p_qb = ps_qb.size() == 1 ? ps_qb[0] : fisher_combine(ps_qb);
    }
    out[gene] = std::move(meta);
  }
  return out;
}

Eigen::VectorXd variant_effect_signs(const Eigen::Ref<const Eigen::VectorXd>& y,
                                     const Eigen::Ref<const Eigen::MatrixXd>& covariates,
                                     const Eigen::Ref<const Eigen::MatrixXd>& x) {
  Eigen::VectorXd r = y;
  Eigen::MatrixXd x_star = x;
  if (covariates.cols() > 0) {
    r = project_out(covariates, y);
    x_star = project_out(covariates, x);
  }
  Eigen::VectorXd signs(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    signs[j] = x_star.col(j).dot(r) < 0.0 ? -1.0 : 1.0;
  }
  return signs;
}

QuantileEffectProfile quantile_effect_profile(
    const Eigen::Ref<const Eigen::VectorXd>& y, const GenotypeBlock& block,
    const Eigen::Ref<const Eigen::VectorXd>& signs, const VariantWeights& w,
    int bootstrap_reps, const Eigen::Ref<const Eigen::VectorXd>& levels,
    std::uint64_t seed) {
  if (bootstrap_reps < 100) {
    throw std::invalid_argument("quantile_effect_profile: need >= 100 bootstrap reps");
  }
  if (signs.size() != block.matrix.cols() || w.w.size() != block.matrix.cols()) {
    throw std::invalid_argument("quantile_effect_profile: per-variant inputs mismatch");
  }
  const Eigen::Index n = y.size();
  auto [common_idx, rare_idx] = stratify_variants(block, n);

  // signed weighted burden per stratum; above-median in either marks "high"
  auto burden_scores = [&](const std::vector<Eigen::Index>& idx) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    for (Eigen::Index j : idx) {
      b += signs[j] * w.w[j] * block.matrix.col(j);
    }
    return b;
  };

  std::vector<char> high(n, 0);
  for (const auto* idx : {&common_idx, &rare_idx}) {
    if (idx->empty()) continue;
    Eigen::VectorXd b = burden_scores(*idx);
    std::vector<double> values(b.data(), b.data() + n);
    const double med = median_of(values);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (b[i] > med) high[i] = 1;
    }
  }

  std::vector<double> y_high, y_ref;
  for (Eigen::Index i = 0; i < n; ++i) {
    (high[i] ? y_high : y_ref).push_back(y[i]);
  }
  if (y_high.empty() || y_ref.empty()) {
    throw std::invalid_argument("quantile_effect_profile: a group is empty");
  }

  QuantileEffectProfile out;
  out.levels = levels;
  out.n_high = static_cast<Eigen::Index>(y_high.size());
  out.n_reference = static_cast<Eigen::Index>(y_ref.size());
  out.delta.resize(levels.size());
  out.ci_low.resize(levels.size());
  out.ci_high.resize(levels.size());

  std::sort(y_high.begin(), y_high.end());
  std::sort(y_ref.begin(), y_ref.end());
  for (Eigen::Index k = 0; k < levels.size(); ++k) {
    out.delta[k] = empirical_quantile(y_high, levels[k]) -
                   empirical_quantile(y_ref, levels[k]);
  }

  Rng rng = Rng::keyed(seed, 0x9ef);
  Eigen::MatrixXd boot(bootstrap_reps, levels.size());
  std::vector<double> rs_high(y_high.size()), rs_ref(y_ref.size());
  for (int b = 0; b < bootstrap_reps; ++b) {
    for (auto& v : rs_high) v = y_high[rng.below(y_high.size())];
    for (auto& v : rs_ref) v = y_ref[rng.below(y_ref.size())];
    std::sort(rs_high.begin(), rs_high.end());
    std::sort(rs_ref.begin(), rs_ref.end());
    for (Eigen::Index k = 0; k < levels.size(); ++k) {
      boot(b, k) = empirical_quantile(rs_high, levels[k]) -
                   empirical_quantile(rs_ref, levels[k]);
    }
  }
  for (Eigen::Index k = 0; k < levels.size(); ++k) {
    std::vector<double> col(boot.col(k).data(), boot.col(k).data() + bootstrap_reps);
    std::sort(col.begin(), col.end());
    double lo = empirical_quantile(col, 0.025);
    double hi = empirical_quantile(col, 0.975);
    // percentile band, widened if needed so the point estimate stays inside
    out.ci_low[k] = std::min(lo, out.delta[k]);
    out.ci_high[k] = std::max(hi, out.delta[k]);
  }
  return out;
}

}  // namespace iqrat
