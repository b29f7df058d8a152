#ifndef IQRAT_SIMULATE_HPP
#define IQRAT_SIMULATE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "iqrat/assoc.hpp"
#include "iqrat/pipeline.hpp"

namespace iqrat {

// Reference haplotypes with independent sites whose frequencies follow a
// 1/x spectrum on [5e-5, 0.5]; stands in for a coalescent panel.
struct HaplotypePool {
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> haplotypes;  // H x L
  Eigen::VectorXd freqs;         // empirical per-site allele frequencies
  Eigen::VectorXd target_freqs;  // frequencies the sites were drawn at
};

HaplotypePool generate_pool(Eigen::Index n_haplotypes, Eigen::Index n_sites,
                            std::uint64_t seed);

// Genotypes for a contiguous random window: each subject is the sum of two
// uniformly drawn haplotypes. Monomorphic columns are dropped.
GenotypeBlock draw_genotypes(const HaplotypePool& pool, Eigen::Index n,
                             Eigen::Index variant_count, std::uint64_t seed);

enum class SimModel { Location, LocationScale, BiDirectional, LocalQuantile };
enum class ErrorLaw { Normal, ChiSq2, Cauchy, T2 };

SimModel parse_sim_model(const std::string& name);
ErrorLaw parse_error_law(const std::string& name);
const char* sim_model_name(SimModel model);
const char* error_law_name(ErrorLaw law);

// quantile function of the error law
double error_quantile(ErrorLaw law, double u);

struct SimConfig {
  SimModel model = SimModel::Location;
  ErrorLaw error = ErrorLaw::Normal;
  double beta = 0.0;
  double gamma = 0.0;
  double causal_common_rate = 0.2;
  double causal_rare_rate = 0.3;
  Eigen::Index n = 500;
  Eigen::Index region_variants = 30;
  Eigen::Index pool_haplotypes = 10000;
  Eigen::Index pool_sites = 512;
  Eigen::Index grid_size = 0;  // 0 = automatic
  std::uint64_t seed = 1;
  std::vector<double> alpha_levels = {0.05, 0.01};
};

struct CausalSet {
  std::vector<Eigen::Index> indices;
  Eigen::VectorXd multipliers;  // |log10 maf| per causal variant
};

// Uniform subsets of each MAF stratum at the given rates (rounded to
// nearest, at least one when the stratum is non-empty and the rate > 0).
CausalSet select_causal(const GenotypeBlock& block, double threshold,
                        double common_rate, double rare_rate, std::uint64_t seed);

// Phenotype under the configured model; per-variant effects scale with
// |log10 maf| of each causal variant.
Eigen::VectorXd simulate_phenotype(const SimConfig& config,
                                   const GenotypeBlock& block,
                                   const CausalSet& causal,
                                   const Eigen::Ref<const Eigen::VectorXd>& covariate,
                                   std::uint64_t seed);

// y_i -> Phi^{-1}((rank_i - 0.5)/n), ties get their average rank.
Eigen::VectorXd rank_inverse_normal(const Eigen::Ref<const Eigen::VectorXd>& y);

// One simulated replicate with the full gene-level report, handed to each
// test procedure.
struct ReplicateContext {
  const GeneTestReport& report;
  const Eigen::VectorXd& y;          // normalized phenotype
  const Eigen::MatrixXd& design;     // intercept + covariate
  const GenotypeBlock& block;
};

struct TestProcedure {
  std::string name;
  std::function<double(const ReplicateContext&)> p_value;
};

// The four standard procedures: iQRAT Q_S / Q_B and the mean-based
// SKAT / Burden baselines.
std::vector<TestProcedure> default_test_procedures();

struct ExperimentCell {
  std::string test;
  double alpha = 0.0;
  double rate = 0.0;
  double mc_se = 0.0;
  Eigen::Index replicates = 0;
};

struct ExperimentResult {
  std::vector<ExperimentCell> cells;
  std::vector<std::vector<double>> p_values;  // [test][replicate]
};

// Monte-Carlo driver: every replicate simulates fresh genotypes and
// phenotype, applies the rank-based inverse-normal transform, and runs all
// procedures on the identical data. Replicate r draws from an independent
// stream keyed by (seed, r), so results do not depend on the thread count.
ExperimentResult run_experiment(const SimConfig& config, Eigen::Index replicates,
                                const std::vector<TestProcedure>& tests,
                                int threads = 1);

enum class Alternative { Location, Lehmann };

struct EfficiencyPoint {
  Alternative alternative = Alternative::Location;
  double parameter = 0.0;
  double r2_wilcoxon = 0.0, r2_normal = 0.0, r2_lehmann = 0.0;
  double r2_mean_based = 0.0;
};

// Asymptotic efficiency R^2 = (1 + u)^2 / (2(1 + 2u)) with u the squared
// standardized noncentrality, for the three scores and their mean-based
// counterpart, under standard-normal errors.
std::vector<EfficiencyPoint> efficiency_curves(Alternative alternative,
                                               const std::vector<double>& parameters);

// gamma(phi, F) = int f(F^{-1}(t)) d phi(t) for standard-normal F.
double location_score_gamma(ScoreKind kind);

}  // namespace iqrat

#endif
