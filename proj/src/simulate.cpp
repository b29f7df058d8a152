#include "iqrat/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "iqrat/numerics.hpp"
#include "iqrat/rng.hpp"

namespace iqrat {

namespace {

// adaptive Simpson with an absolute tolerance
double simpson_step(const std::function<double(double)>& f, double a, double b,
                    double fa, double fm, double fb, double whole, double tol,
                    int depth) {
  if (depth > 60) {
    throw std::runtime_error("adaptive quadrature did not converge");
  }
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (std::abs(left + right - whole) <= 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, b, fa, fm, fb, whole, tol, 0);
}

constexpr double kTrim = 1e-10;     // integration window (kTrim, 1-kTrim)
constexpr double kQuadTol = 1e-9;

double std_normal_pdf_at_quantile(double t) { return normal_pdf(normal_quantile(t)); }

double lehmann_shape(double t) { return -(1.0 - t) * std::log1p(-t); }

}  // namespace

SimModel parse_sim_model(const std::string& name) {
  if (name == "location") return SimModel::Location;
  if (name == "location_scale") return SimModel::LocationScale;
  if (name == "bidirectional") return SimModel::BiDirectional;
  if (name == "local_quantile") return SimModel::LocalQuantile;
  throw std::invalid_argument("unknown simulation model: " + name);
}

ErrorLaw parse_error_law(const std::string& name) {
  if (name == "normal") return ErrorLaw::Normal;
  if (name == "chisq2") return ErrorLaw::ChiSq2;
  if (name == "cauchy") return ErrorLaw::Cauchy;
  if (name == "t2") return ErrorLaw::T2;
  throw std::invalid_argument("unknown error law: " + name);
}

const char* sim_model_name(SimModel model) {
  switch (model) {
    case SimModel::Location: return "location";
    case SimModel::LocationScale: return "location_scale";
    case SimModel::BiDirectional: return "bidirectional";
    case SimModel::LocalQuantile: return "local_quantile";
  }
  return "?";
}

const char* error_law_name(ErrorLaw law) {
  switch (law) {
    case ErrorLaw::Normal: return "normal";
    case ErrorLaw::ChiSq2: return "chisq2";
    case ErrorLaw::Cauchy: return "cauchy";
    case ErrorLaw::T2: return "t2";
  }
  return "?";
}

double error_quantile(ErrorLaw law, double u) {
  switch (law) {
    case ErrorLaw::Normal:
      return normal_quantile(u);
    case ErrorLaw::ChiSq2:
      return -2.0 * std::log1p(-u);
    case ErrorLaw::Cauchy:
      return std::tan(M_PI * (u - 0.5));
    case ErrorLaw::T2:
      return (2.0 * u - 1.0) / std::sqrt(2.0 * u * (1.0 - u));
  }
  return 0.0;
}

HaplotypePool generate_pool(Eigen::Index n_haplotypes, Eigen::Index n_sites,
                            std::uint64_t seed) {
  if (n_haplotypes < 1000 || n_sites < 50) {
    throw std::invalid_argument("generate_pool: need H >= 1000 and L >= 50");
  }
  HaplotypePool pool;
  pool.haplotypes.resize(n_haplotypes, n_sites);
  pool.freqs.resize(n_sites);
  pool.target_freqs.resize(n_sites);

  Rng rng = Rng::keyed(seed, 0x0b5e55ed);
  const double lo = 5e-5, hi = 0.5;
  const double log_ratio = std::log(hi / lo);
  for (Eigen::Index j = 0; j < n_sites; ++j) {
    // inverse-CDF draw from density proportional to 1/x on [lo, hi]
    const double p = lo * std::exp(rng.uniform() * log_ratio);
    pool.target_freqs[j] = p;
    Eigen::Index count = 0;
    do {  // redraw until the site segregates
      count = 0;
      for (Eigen::Index h = 0; h < n_haplotypes; ++h) {
        const bool carrier = rng.bernoulli(p);
        pool.haplotypes(h, j) = carrier ? 1 : 0;
        count += carrier;
      }
    } while (count == 0 || count == n_haplotypes);
    pool.freqs[j] = static_cast<double>(count) / static_cast<double>(n_haplotypes);
  }
  return pool;
}

GenotypeBlock draw_genotypes(const HaplotypePool& pool, Eigen::Index n,
                             Eigen::Index variant_count, std::uint64_t seed) {
  const Eigen::Index n_sites = pool.haplotypes.cols();
  const Eigen::Index n_hap = pool.haplotypes.rows();
  if (variant_count > n_sites) {
    throw std::invalid_argument("draw_genotypes: window exceeds pool width");
  }
  Rng rng = Rng::keyed(seed, 0x6e0);
  const Eigen::Index start =
      static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n_sites - variant_count + 1)));

  Eigen::MatrixXd dosage(n, variant_count);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index h1 = static_cast<Eigen::Index>(rng.below(n_hap));
    const Eigen::Index h2 = static_cast<Eigen::Index>(rng.below(n_hap));
    for (Eigen::Index j = 0; j < variant_count; ++j) {
      dosage(i, j) = static_cast<double>(pool.haplotypes(h1, start + j) +
                                         pool.haplotypes(h2, start + j));
    }
  }
  std::vector<std::string> ids;
  for (Eigen::Index j = 0; j < variant_count; ++j) {
    ids.push_back("site" + std::to_string(start + j));
  }
  return build_genotype_block(std::move(dosage), std::move(ids));
}

CausalSet select_causal(const GenotypeBlock& block, double threshold,
                        double common_rate, double rare_rate, std::uint64_t seed) {
  if (common_rate < 0.0 || common_rate > 1.0 || rare_rate < 0.0 || rare_rate > 1.0) {
    throw std::invalid_argument("select_causal: rates must lie in [0,1]");
  }
  std::vector<Eigen::Index> common, rare;
  for (Eigen::Index j = 0; j < block.maf.size(); ++j) {
    (block.maf[j] > threshold ? common : rare).push_back(j);
  }

  Rng rng = Rng::keyed(seed, 0xca5);
  CausalSet out;
  auto pick = [&](std::vector<Eigen::Index>& stratum, double rate) {
    if (stratum.empty() || rate <= 0.0) return;
    auto want = static_cast<size_t>(std::llround(rate * static_cast<double>(stratum.size())));
    want = std::max<size_t>(want, 1);
    want = std::min(want, stratum.size());
    // partial Fisher-Yates
    for (size_t i = 0; i < want; ++i) {
      const size_t j = i + static_cast<size_t>(rng.below(stratum.size() - i));
      std::swap(stratum[i], stratum[j]);
      out.indices.push_back(stratum[i]);
    }
  };
  pick(common, common_rate);
  pick(rare, rare_rate);
  std::sort(out.indices.begin(), out.indices.end());

  out.multipliers.resize(static_cast<Eigen::Index>(out.indices.size()));
  for (size_t j = 0; j < out.indices.size(); ++j) {
    out.multipliers[static_cast<Eigen::Index>(j)] =
        std::abs(std::log10(block.maf[out.indices[j]]));
  }
  return out;
}

Eigen::VectorXd simulate_phenotype(const SimConfig& config,
                                   const GenotypeBlock& block,
                                   const CausalSet& causal,
                                   const Eigen::Ref<const Eigen::VectorXd>& covariate,
                                   std::uint64_t seed) {
  const Eigen::Index n = block.matrix.rows();
  if (covariate.size() != n) {
    throw std::invalid_argument("simulate_phenotype: covariate length mismatch");
  }
  const auto k = static_cast<Eigen::Index>(causal.indices.size());

  Eigen::VectorXd beta = config.beta * causal.multipliers;
  Eigen::VectorXd gamma = config.gamma * causal.multipliers;
  Rng rng = Rng::keyed(seed, 0xfe0);

  if (config.model == SimModel::BiDirectional && k > 0) {
    // half the causal variants flip sign (effect and scale together)
    std::vector<Eigen::Index> order(k);
    std::iota(order.begin(), order.end(), 0);
    for (Eigen::Index i = 0; i < k; ++i) {
      const Eigen::Index j = i + static_cast<Eigen::Index>(rng.below(k - i));
      std::swap(order[i], order[j]);
    }
    const Eigen::Index flips = static_cast<Eigen::Index>(std::llround(0.5 * k));
    for (Eigen::Index i = 0; i < flips; ++i) {
      beta[order[i]] = -beta[order[i]];
      gamma[order[i]] = -gamma[order[i]];
    }
  }

  Eigen::MatrixXd xc(n, k);
  for (Eigen::Index j = 0; j < k; ++j) xc.col(j) = block.matrix.col(causal.indices[j]);

  Eigen::VectorXd base = Eigen::VectorXd::Ones(n) + 1.2 * covariate;
  Eigen::VectorXd y(n);

  switch (config.model) {
    case SimModel::Location: {
      Eigen::VectorXd shift = k > 0 ? (xc * beta).eval() : Eigen::VectorXd::Zero(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        y[i] = base[i] + shift[i] + error_quantile(config.error, rng.uniform());
      }
      break;
    }
    case SimModel::LocationScale:
    case SimModel::BiDirectional: {
      Eigen::VectorXd shift = k > 0 ? (xc * beta).eval() : Eigen::VectorXd::Zero(n);
      Eigen::VectorXd scale = Eigen::VectorXd::Ones(n);
      if (k > 0) scale += xc * gamma;
      if ((scale.array() <= 0.0).any()) {
        throw std::invalid_argument("simulate_phenotype: nonpositive scale factor");
      }
      for (Eigen::Index i = 0; i < n; ++i) {
        y[i] = base[i] + shift[i] + scale[i] * error_quantile(config.error, rng.uniform());
      }
      break;
    }
    case SimModel::LocalQuantile: {
      // inverse-quantile sampling: one uniform drives both the error and
      // the upper-tail-only effect profile
      for (Eigen::Index i = 0; i < n; ++i) {
        const double tau = rng.uniform();
        double effect = 0.0;
        if (tau > 0.7 && k > 0) {
          const double profile = 5.0 * (tau - 0.7) / 0.3;
          effect = profile * xc.row(i).dot(beta);
        }
        y[i] = base[i] + effect + error_quantile(config.error, tau);
      }
      break;
    }
  }
  return y;
}

Eigen::VectorXd rank_inverse_normal(const Eigen::Ref<const Eigen::VectorXd>& y) {
  const Eigen::Index n = y.size();
  if (n < 2) {
    throw std::invalid_argument("rank_inverse_normal: need at least 2 values");
  }
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return y[a] < y[b]; });

  Eigen::VectorXd out(n);
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && y[order[j + 1]] == y[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;  // ties averaged
    const double z = normal_quantile((avg_rank - 0.5) / static_cast<double>(n));
    for (Eigen::Index m = i; m <= j; ++m) out[order[m]] = z;
    i = j + 1;
  }
  return out;
}

std::vector<TestProcedure> default_test_procedures() {
  return {
      {"iqrat_qs", [](const ReplicateContext& c) { return c.report.p_iqrat_qs.value_or(1.0); }},
      {"iqrat_qb", [](const ReplicateContext& c) { return c.report.p_iqrat_qb.value_or(1.0); }},
      {"skat_mean", [](const ReplicateContext& c) { return c.report.baseline_skat_p.value_or(1.0); }},
      {"burden_mean", [](const ReplicateContext& c) { return c.report.baseline_burden_p.value_or(1.0); }},
  };
}

ExperimentResult run_experiment(const SimConfig& config, Eigen::Index replicates,
                                const std::vector<TestProcedure>& tests,
                                int threads) {
  if (replicates < 100) {
    throw std::invalid_argument("run_experiment: need at least 100 replicates");
  }
  const HaplotypePool pool = generate_pool(config.pool_haplotypes, config.pool_sites,
                                           mix_seed(config.seed, 0xa001));
  const double threshold = 1.0 / std::sqrt(2.0 * static_cast<double>(config.n));

  ExperimentResult result;
  result.p_values.assign(tests.size(), std::vector<double>(replicates, 1.0));

  IqratOptions options;
  options.grid_size = config.grid_size;

  std::atomic<Eigen::Index> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&]() {
    for (;;) {
      const Eigen::Index r = next.fetch_add(1);
      if (r >= replicates) return;
      try {
        const std::uint64_t rep_seed = mix_seed(config.seed, static_cast<std::uint64_t>(r));
        GenotypeBlock block =
            draw_genotypes(pool, config.n, config.region_variants, mix_seed(rep_seed, 1));
        Rng cov_rng = Rng::keyed(rep_seed, 2);
        Eigen::VectorXd covariate(config.n);
        for (Eigen::Index i = 0; i < config.n; ++i) covariate[i] = 4.0 + cov_rng.normal();
        CausalSet causal = select_causal(block, threshold, config.causal_common_rate,
                                         config.causal_rare_rate, mix_seed(rep_seed, 3));
        Eigen::VectorXd y =
            simulate_phenotype(config, block, causal, covariate, mix_seed(rep_seed, 4));
        Eigen::VectorXd y_norm = rank_inverse_normal(y);

        Eigen::MatrixXd design(config.n, 2);
        design.col(0).setOnes();
        design.col(1) = covariate;

        NullModel null_model = fit_null_model(y_norm, design, options);
        GeneTestReport report = iqrat_gene_test(null_model, block, options);
        ReplicateContext ctx{report, y_norm, design, block};
        for (size_t t = 0; t < tests.size(); ++t) {
          result.p_values[t][r] = tests[t].p_value(ctx);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(replicates);
        return;
      }
    }
  };

  const int n_workers = std::max(1, threads);
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool_threads;
    for (int t = 0; t < n_workers; ++t) pool_threads.emplace_back(worker);
    for (auto& th : pool_threads) th.join();
  }
  if (error) std::rethrow_exception(error);

  for (size_t t = 0; t < tests.size(); ++t) {
    for (double alpha : config.alpha_levels) {
      Eigen::Index hits = 0;
      for (double p : result.p_values[t]) {
        if (p <= alpha) ++hits;
      }
      ExperimentCell cell;
      cell.test = tests[t].name;
      cell.alpha = alpha;
      cell.rate = static_cast<double>(hits) / static_cast<double>(replicates);
      cell.mc_se = std::sqrt(cell.rate * (1.0 - cell.rate) / static_cast<double>(replicates));
      cell.replicates = replicates;
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

double location_score_gamma(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::Wilcoxon:
      return integrate(std_normal_pdf_at_quantile, kTrim, 1.0 - kTrim, kQuadTol);
    case ScoreKind::NormalScore:
      // d phi_2 = dt / pdf(Phi^{-1}(t)) makes the integrand identically one
      return 1.0 - 2.0 * kTrim;
    case ScoreKind::Lehmann:
      return integrate([](double t) { return std_normal_pdf_at_quantile(t) / (1.0 - t); },
                       kTrim, 1.0 - kTrim, kQuadTol);
  }
  return 0.0;
}

namespace {

double lehmann_xi_factor(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::Wilcoxon:
      return integrate(lehmann_shape, kTrim, 1.0 - kTrim, kQuadTol);
    case ScoreKind::NormalScore:
      return integrate([](double t) { return lehmann_shape(t) / std_normal_pdf_at_quantile(t); },
                       kTrim, 1.0 - kTrim, kQuadTol);
    case ScoreKind::Lehmann:
      return integrate([](double t) { return -std::log1p(-t); }, kTrim, 1.0 - kTrim,
                       kQuadTol);
  }
  return 0.0;
}

double r2_from(double noncentrality_sq) {
  const double u = noncentrality_sq;
  return (1.0 + u) * (1.0 + u) / (2.0 * (1.0 + 2.0 * u));
}

}  // namespace

std::vector<EfficiencyPoint> efficiency_curves(Alternative alternative,
                                               const std::vector<double>& parameters) {
  for (double p : parameters) {
    if (p < 0.0) {
      throw std::invalid_argument("efficiency_curves: parameters must be >= 0");
    }
  }
  const ScoreKind kinds[3] = {ScoreKind::Wilcoxon, ScoreKind::NormalScore,
                              ScoreKind::Lehmann};
  double xi_factor[3], mean_factor;
  if (alternative == Alternative::Location) {
    for (int s = 0; s < 3; ++s) xi_factor[s] = location_score_gamma(kinds[s]);
    mean_factor = 1.0;  // beta-bar equals the location parameter itself
  } else {
    for (int s = 0; s < 3; ++s) xi_factor[s] = lehmann_xi_factor(kinds[s]);
    // beta-bar = int beta(tau) dtau, same integrand as the Normal-score xi
    mean_factor = lehmann_xi_factor(ScoreKind::NormalScore);
  }

  std::vector<EfficiencyPoint> out;
  for (double p : parameters) {
    EfficiencyPoint pt;
    pt.alternative = alternative;
    pt.parameter = p;
    double r2[3];
    for (int s = 0; s < 3; ++s) {
      const double xi = p * xi_factor[s];
      r2[s] = r2_from(xi * xi / score_variance({kinds[s]}));
    }
    pt.r2_wilcoxon = r2[0];
    pt.r2_normal = r2[1];
    pt.r2_lehmann = r2[2];
    const double beta_bar = p * mean_factor;
    pt.r2_mean_based = r2_from(beta_bar * beta_bar / (beta_bar * beta_bar + 1.0));
    out.push_back(pt);
  }
  return out;
}

}  // namespace iqrat
