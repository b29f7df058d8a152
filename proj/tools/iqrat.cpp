#include <CLI11.hpp>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "iqrat/io.hpp"
#include "iqrat/pipeline.hpp"
#include "iqrat/rng.hpp"
#include "iqrat/simulate.hpp"

namespace {

using namespace iqrat;

int default_threads() {
  if (const char* env = std::getenv("IQRAT_THREADS")) {
    const int t = std::atoi(env);
    if (t > 0) return t;
  }
  return 1;
}

std::vector<double> parse_grid(const std::string& spec) {
  std::stringstream ss(spec);
  std::string tok;
  std::vector<double> parts;
  while (std::getline(ss, tok, ':')) parts.push_back(std::stod(tok));
  if (parts.size() != 3) {
    throw std::invalid_argument("grid must be start:stop:step");
  }
  const double start = parts[0], stop = parts[1], step = parts[2];
  if (step <= 0.0) throw std::invalid_argument("grid step must be positive");
  std::vector<double> out;
  for (double v = start; v <= stop + 1e-12; v += step) out.push_back(v);
  return out;
}

int run_test(const std::string& geno, const std::string& pheno,
             const std::string& covar, const std::string& genes,
             const std::string& out_path, Eigen::Index grid_size, int threads) {
  Dataset ds = load_dataset(pheno, covar, geno, genes);
  if (ds.dropped_incomplete > 0) {
    std::cerr << "dropped " << ds.dropped_incomplete
              << " samples with missing phenotype/covariates\n";
  }

  IqratOptions options;
  options.grid_size = grid_size;
  NullModel null_model = fit_null_model(ds.phenotype, ds.design, options);

  std::vector<std::pair<std::string, const GenotypeBlock*>> work;
  for (const auto& [gene, block] : ds.genes) work.emplace_back(gene, &block);
  std::vector<GeneTestReport> reports(work.size());

  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const size_t g = next.fetch_add(1);
      if (g >= work.size()) return;
      reports[g] = iqrat_gene_test(null_model, *work[g].second, options, work[g].first);
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  const bool as_tsv = out_path.size() > 4 &&
                      out_path.compare(out_path.size() - 4, 4, ".tsv") == 0;
  std::ofstream out(out_path);
  if (!out) throw std::invalid_argument("cannot write " + out_path);
  if (as_tsv) {
    out << report_tsv_header() << '\n';
    for (const auto& r : reports) out << report_to_tsv_row(r) << '\n';
  } else {
    out << "[\n";
    for (size_t g = 0; g < reports.size(); ++g) {
      out << report_to_json(reports[g]);
      if (g + 1 < reports.size()) out << ",";
      out << "\n";
    }
    out << "]\n";
  }
  std::cerr << "tested " << reports.size() << " genes (n = " << null_model.n << ")\n";
  return 0;
}

int run_simulate(const std::string& config_path, const std::string& prefix,
                 Eigen::Index gene_count) {
  SimConfig config = sim_config_from(read_config(config_path));
  HaplotypePool pool = generate_pool(config.pool_haplotypes, config.pool_sites,
                                     mix_seed(config.seed, 0xa001));
  Rng cov_rng = Rng::keyed(config.seed, 0xc0);
  Eigen::VectorXd covariate(config.n);
  for (Eigen::Index i = 0; i < config.n; ++i) covariate[i] = 4.0 + cov_rng.normal();

  const double threshold = 1.0 / std::sqrt(2.0 * static_cast<double>(config.n));
  std::map<std::string, GenotypeBlock> genes;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(config.n);
  for (Eigen::Index g = 0; g < gene_count; ++g) {
    const std::uint64_t gene_seed = mix_seed(config.seed, 0x9e000 + g);
    GenotypeBlock block =
        draw_genotypes(pool, config.n, config.region_variants, mix_seed(gene_seed, 1));
    CausalSet causal = select_causal(block, threshold, config.causal_common_rate,
                                     config.causal_rare_rate, mix_seed(gene_seed, 3));
    // phenotype driven by the first gene; later genes are null passengers
    if (g == 0) {
      y = simulate_phenotype(config, block, causal, covariate, mix_seed(gene_seed, 4));
    }
    genes["gene" + std::to_string(g)] = std::move(block);
  }

  Eigen::MatrixXd covariates(config.n, 1);
  covariates.col(0) = covariate;
  write_dataset_tsv(prefix, y, covariates, genes);
  std::cerr << "wrote " << prefix << ".{pheno,covar,geno}.tsv (n = " << config.n
            << ", genes = " << gene_count << ")\n";
  return 0;
}

int run_power(const std::string& config_path, Eigen::Index replicates,
              const std::string& out_path, int threads, std::int64_t seed_override) {
  SimConfig config = sim_config_from(read_config(config_path));
  if (seed_override >= 0) config.seed = static_cast<std::uint64_t>(seed_override);
  ExperimentResult result =
      run_experiment(config, replicates, default_test_procedures(), threads);
  std::ofstream out(out_path);
  if (!out) throw std::invalid_argument("cannot write " + out_path);
  write_experiment_tsv(out, result);
  std::cerr << "ran " << replicates << " replicates (" << sim_model_name(config.model)
            << ", " << error_law_name(config.error) << ")\n";
  return 0;
}

int run_efficiency(const std::string& alternative, const std::string& grid_spec,
                   const std::string& out_path) {
  const Alternative alt = [&] {
    if (alternative == "location") return Alternative::Location;
    if (alternative == "lehmann") return Alternative::Lehmann;
    throw std::invalid_argument("alternative must be location or lehmann");
  }();
  auto points = efficiency_curves(alt, parse_grid(grid_spec));
  std::ofstream out(out_path);
  if (!out) throw std::invalid_argument("cannot write " + out_path);
  write_efficiency_tsv(out, points);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"iqrat: integrated quantile rank association tests"};
  app.require_subcommand(1);

  std::string geno, pheno, covar, genes, out, config, alternative, grid_spec;
  Eigen::Index grid_size = 0, replicates = 2000, gene_count = 1;
  std::int64_t seed = -1;
  int threads = default_threads();

  auto* test_cmd = app.add_subcommand("test", "run gene-level association tests");
  test_cmd->add_option("--geno", geno, "genotype TSV or VCF")->required();
  test_cmd->add_option("--pheno", pheno, "phenotype TSV")->required();
  test_cmd->add_option("--covar", covar, "covariate TSV")->required();
  test_cmd->add_option("--genes", genes, "gene region map (required for VCF)");
  test_cmd->add_option("--out", out, "report path (.json or .tsv)")->required();
  test_cmd->add_option("--grid", grid_size, "quantile grid size (0 = automatic)");
  test_cmd->add_option("--threads", threads, "worker threads");
  test_cmd->add_option("--seed", seed, "accepted for uniformity; test is deterministic");

  auto* sim_cmd = app.add_subcommand("simulate", "emit a synthetic dataset");
  sim_cmd->add_option("--config", config, "key=value simulation config")->required();
  sim_cmd->add_option("--out-prefix", out, "output path prefix")->required();
  sim_cmd->add_option("--genes", gene_count, "number of genes to emit");

  auto* power_cmd = app.add_subcommand("power", "Monte-Carlo type I / power study");
  power_cmd->add_option("--config", config, "key=value simulation config")->required();
  power_cmd->add_option("--replicates", replicates, "Monte-Carlo replicates");
  power_cmd->add_option("--threads", threads, "worker threads");
  power_cmd->add_option("--out", out, "output TSV")->required();
  power_cmd->add_option("--seed", seed, "master seed override");

  auto* eff_cmd = app.add_subcommand("efficiency", "asymptotic efficiency curves");
  eff_cmd->add_option("--alternative", alternative, "location | lehmann")->required();
  eff_cmd->add_option("--grid", grid_spec, "parameter grid start:stop:step")->required();
  eff_cmd->add_option("--out", out, "output TSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (test_cmd->parsed()) {
      return run_test(geno, pheno, covar, genes, out, grid_size, threads);
    }
    if (sim_cmd->parsed()) {
      return run_simulate(config, out, gene_count);
    }
    if (power_cmd->parsed()) {
      return run_power(config, replicates, out, threads, seed);
    }
    if (eff_cmd->parsed()) {
      return run_efficiency(alternative, grid_spec, out);
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
