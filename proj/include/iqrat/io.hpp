#ifndef IQRAT_IO_HPP
#define IQRAT_IO_HPP

#include <Eigen/Dense>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "iqrat/assoc.hpp"
#include "iqrat/pipeline.hpp"
#include "iqrat/simulate.hpp"

namespace iqrat {

// Thrown with the offending line (or record locus) in the message.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericTable {
  std::vector<std::string> column_names;  // empty when has_header = false
  std::vector<std::string> row_ids;       // first column when it is non-numeric
  Eigen::MatrixXd values;                 // NaN marks "NA"
};

// Tab-separated numeric table; "NA" is the missing sentinel. A non-numeric
// leading column is treated as row identifiers.
NumericTable read_table(const std::string& path, bool has_header);

struct GeneRegion {
  std::string gene_id;
  std::string chrom;
  long start = 0;  // half-open [start, end)
  long end = 0;
};

std::vector<GeneRegion> read_gene_regions(const std::string& path);

// Minimal VCF v4.x reader: bi-allelic sites, GT field only. Multi-allelic
// records are skipped and counted; missing genotypes are mean-imputed.
std::map<std::string, GenotypeBlock> read_vcf_minimal(
    const std::string& path, const std::vector<GeneRegion>& regions,
    std::vector<std::string>* sample_ids_out = nullptr,
    Eigen::Index* skipped_multiallelic = nullptr);

struct Dataset {
  Eigen::VectorXd phenotype;
  Eigen::MatrixXd design;  // intercept prepended to the covariates
  std::vector<std::string> sample_ids;
  std::map<std::string, GenotypeBlock> genes;
  Eigen::Index dropped_incomplete = 0;  // rows lost to missing Y or C
};

// Assembles a dataset from phenotype and covariate TSVs plus genotypes in
// either the gene/variant TSV layout or VCF (+regions). Sample order follows
// the phenotype file; rows with missing phenotype or covariates are dropped.
Dataset load_dataset(const std::string& pheno_path, const std::string& covar_path,
                     const std::string& geno_path,
                     const std::string& regions_path = "");

// key=value configuration lines ('#' comments allowed)
std::map<std::string, std::string> read_config(const std::string& path);
SimConfig sim_config_from(const std::map<std::string, std::string>& kv);

std::string report_to_json(const GeneTestReport& report);
GeneTestReport report_from_json(const std::string& json_text);

std::string report_tsv_header();
std::string report_to_tsv_row(const GeneTestReport& report);

void write_experiment_tsv(std::ostream& os, const ExperimentResult& result);
void write_efficiency_tsv(std::ostream& os, const std::vector<EfficiencyPoint>& points);

// Writes <prefix>.pheno.tsv / .covar.tsv / .geno.tsv for a simulated dataset.
void write_dataset_tsv(const std::string& prefix, const Eigen::VectorXd& y,
                       const Eigen::MatrixXd& covariates,
                       const std::map<std::string, GenotypeBlock>& genes);

}  // namespace iqrat

#endif
