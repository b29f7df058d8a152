#include "iqrat/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace iqrat {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  for (;;) {
    const size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

bool parse_double(const std::string& field, double* out) {
  if (field == "NA") {
    *out = std::numeric_limits<double>::quiet_NaN();
    return true;
  }
  try {
    size_t used = 0;
    *out = std::stod(field, &used);
    return used == field.size();
  } catch (...) {
    return false;
  }
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return in;
}

std::string format_double(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

}  // namespace

NumericTable read_table(const std::string& path, bool has_header) {
  std::ifstream in = open_or_throw(path);
  NumericTable table;
  std::vector<std::vector<double>> rows;
  std::string line;
  size_t lineno = 0;
  size_t width = 0;
  bool labeled_rows = false;

  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_tabs(line);

    if (has_header && table.column_names.empty() && rows.empty()) {
      table.column_names = fields;
      continue;
    }
    if (width == 0) {
      width = fields.size();
      // a declared sample_id column wins even when the ids are numeric
      if (!table.column_names.empty() && table.column_names[0] == "sample_id") {
        labeled_rows = true;
      } else {
        double probe;
        labeled_rows = !parse_double(fields[0], &probe);
      }
    } else if (fields.size() != width) {
      throw ParseError(path + ": ragged row at line " + std::to_string(lineno));
    }

    std::vector<double> row;
    for (size_t j = 0; j < fields.size(); ++j) {
      if (j == 0 && labeled_rows) {
        table.row_ids.push_back(fields[0]);
        continue;
      }
      double v;
      if (!parse_double(fields[j], &v)) {
        throw ParseError(path + ": non-numeric field '" + fields[j] + "' at line " +
                         std::to_string(lineno));
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }

  const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index c = r > 0 ? static_cast<Eigen::Index>(rows[0].size()) : 0;
  table.values.resize(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) table.values(i, j) = rows[i][j];
  }
  return table;
}

std::vector<GeneRegion> read_gene_regions(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::vector<GeneRegion> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_tabs(line);
    if (lineno == 1 && fields.size() >= 4 && fields[0] == "gene_id") continue;
    if (fields.size() < 4) {
      throw ParseError(path + ": expected gene_id/chrom/start/end at line " +
                       std::to_string(lineno));
    }
    GeneRegion region;
    region.gene_id = fields[0];
    region.chrom = fields[1];
    try {
      region.start = std::stol(fields[2]);
      region.end = std::stol(fields[3]);
    } catch (...) {
      throw ParseError(path + ": bad interval at line " + std::to_string(lineno));
    }
    out.push_back(std::move(region));
  }
  return out;
}

namespace {

void mean_impute(Eigen::MatrixXd& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    double sum = 0.0;
    Eigen::Index seen = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (!std::isnan(m(i, j))) {
        sum += m(i, j);
        ++seen;
      }
    }
    const double mean = seen > 0 ? sum / static_cast<double>(seen) : 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (std::isnan(m(i, j))) m(i, j) = mean;
    }
  }
}

}  // namespace

std::map<std::string, GenotypeBlock> read_vcf_minimal(
    const std::string& path, const std::vector<GeneRegion>& regions,
    std::vector<std::string>* sample_ids_out, Eigen::Index* skipped_multiallelic) {
  std::ifstream in = open_or_throw(path);
  std::string line;
  std::vector<std::string> samples;
  Eigen::Index skipped = 0;

  struct VariantRow {
    std::string gene_id, variant_id;
    std::vector<double> dosages;
  };
  std::vector<VariantRow> variants;

  // earlier-starting gene wins overlap ties
  auto assign_gene = [&](const std::string& chrom, long pos) -> const GeneRegion* {
    const GeneRegion* best = nullptr;
    for (const auto& region : regions) {
      if (region.chrom != chrom || pos < region.start || pos >= region.end) continue;
      if (!best || region.start < best->start) best = &region;
    }
    return best;
  };

  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    if (line.rfind("##", 0) == 0) continue;
    if (line.rfind("#CHROM", 0) == 0) {
      auto fields = split_tabs(line);
      if (fields.size() < 10) throw ParseError(path + ": VCF header has no samples");
      samples.assign(fields.begin() + 9, fields.end());
      continue;
    }
    if (samples.empty()) throw ParseError(path + ": missing #CHROM header line");

    auto fields = split_tabs(line);
    if (fields.size() != samples.size() + 9) {
      throw ParseError(path + ": wrong field count at " +
                       (fields.size() > 1 ? fields[0] + ":" + fields[1] : "record"));
    }
    const std::string& chrom = fields[0];
    const std::string locus = chrom + ":" + fields[1];
    long pos = 0;
    try {
      pos = std::stol(fields[1]);
    } catch (...) {
      throw ParseError(path + ": bad POS at " + locus);
    }
    const std::string& alt = fields[4];
    if (alt.find(',') != std::string::npos) {
      ++skipped;
      continue;
    }
    const GeneRegion* region = assign_gene(chrom, pos);
    if (!region) continue;

    // locate GT within FORMAT
    size_t gt_index = std::string::npos;
    {
      std::stringstream fmt(fields[8]);
      std::string key;
      size_t idx = 0;
      while (std::getline(fmt, key, ':')) {
        if (key == "GT") {
          gt_index = idx;
          break;
        }
        ++idx;
      }
    }
    if (gt_index == std::string::npos) {
      throw ParseError(path + ": no GT in FORMAT at " + locus);
    }

    VariantRow row;
    row.gene_id = region->gene_id;
    row.variant_id = fields[2] == "." ? locus : fields[2];
    row.dosages.reserve(samples.size());
    for (size_t s = 0; s < samples.size(); ++s) {
      const std::string& cell = fields[9 + s];
      std::string gt;
      {
        std::stringstream parts(cell);
        size_t idx = 0;
        while (std::getline(parts, gt, ':')) {
          if (idx == gt_index) break;
          ++idx;
        }
        if (idx != gt_index) throw ParseError(path + ": short sample field at " + locus);
      }
      const size_t sep = gt.find_first_of("/|");
      if (sep == std::string::npos || sep == 0 || sep + 1 >= gt.size()) {
        throw ParseError(path + ": malformed GT '" + gt + "' at " + locus);
      }
      const std::string a1 = gt.substr(0, sep), a2 = gt.substr(sep + 1);
      if (a1 == "." || a2 == ".") {
        row.dosages.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      if ((a1 != "0" && a1 != "1") || (a2 != "0" && a2 != "1")) {
        throw ParseError(path + ": malformed GT '" + gt + "' at " + locus);
      }
      row.dosages.push_back((a1 == "1" ? 1.0 : 0.0) + (a2 == "1" ? 1.0 : 0.0));
    }
    variants.push_back(std::move(row));
  }

  if (sample_ids_out) *sample_ids_out = samples;
  if (skipped_multiallelic) *skipped_multiallelic = skipped;

  std::map<std::string, GenotypeBlock> out;
  std::map<std::string, std::vector<const VariantRow*>> by_gene;
  for (const auto& v : variants) by_gene[v.gene_id].push_back(&v);
  for (auto& [gene, rows] : by_gene) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(samples.size()),
                      static_cast<Eigen::Index>(rows.size()));
    std::vector<std::string> ids;
    for (size_t j = 0; j < rows.size(); ++j) {
      ids.push_back(rows[j]->variant_id);
      for (size_t i = 0; i < samples.size(); ++i) {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[j]->dosages[i];
      }
    }
    mean_impute(m);
    out[gene] = build_genotype_block(std::move(m), std::move(ids));
  }
  return out;
}

Dataset load_dataset(const std::string& pheno_path, const std::string& covar_path,
                     const std::string& geno_path, const std::string& regions_path) {
  NumericTable pheno = read_table(pheno_path, true);
  NumericTable covar = read_table(covar_path, true);
  if (pheno.values.cols() != 1) {
    throw ParseError(pheno_path + ": expected one phenotype column");
  }
  if (pheno.row_ids.empty() || covar.row_ids.empty()) {
    throw ParseError("phenotype/covariate files need a sample_id column");
  }

  std::map<std::string, Eigen::Index> covar_row;
  for (size_t i = 0; i < covar.row_ids.size(); ++i) {
    covar_row[covar.row_ids[i]] = static_cast<Eigen::Index>(i);
  }

  // genotype columns, keyed by sample
  std::map<std::string, std::vector<double>> geno_columns;  // sample -> dosages
  std::vector<std::pair<std::string, std::string>> variant_order;  // gene, variant
  std::map<std::string, GenotypeBlock> vcf_genes;
  std::vector<std::string> vcf_samples;
  const bool is_vcf = geno_path.size() > 4 &&
                      geno_path.compare(geno_path.size() - 4, 4, ".vcf") == 0;
  if (is_vcf) {
    if (regions_path.empty()) {
      throw std::invalid_argument("VCF genotypes need a gene-regions file");
    }
    vcf_genes = read_vcf_minimal(geno_path, read_gene_regions(regions_path), &vcf_samples);
  }

  // sample order follows the phenotype file; drop incomplete rows
  Dataset ds;
  std::vector<Eigen::Index> pheno_keep;
  for (size_t i = 0; i < pheno.row_ids.size(); ++i) {
    const std::string& id = pheno.row_ids[i];
    const auto it = covar_row.find(id);
    if (it == covar_row.end()) {
      throw ParseError("sample " + id + " missing from " + covar_path);
    }
    const bool y_ok = !std::isnan(pheno.values(static_cast<Eigen::Index>(i), 0));
    const bool c_ok = !covar.values.row(it->second).hasNaN();
    if (y_ok && c_ok) {
      pheno_keep.push_back(static_cast<Eigen::Index>(i));
    } else {
      ++ds.dropped_incomplete;
    }
  }

  const Eigen::Index n = static_cast<Eigen::Index>(pheno_keep.size());
  if (n == 0) throw std::invalid_argument("no complete samples");
  ds.phenotype.resize(n);
  ds.design.resize(n, covar.values.cols() + 1);
  ds.design.col(0).setOnes();
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto src = pheno_keep[static_cast<size_t>(i)];
    const std::string& id = pheno.row_ids[static_cast<size_t>(src)];
    ds.sample_ids.push_back(id);
    ds.phenotype[i] = pheno.values(src, 0);
    ds.design.row(i).tail(covar.values.cols()) = covar.values.row(covar_row[id]);
  }

  if (is_vcf) {
    std::map<std::string, Eigen::Index> vcf_row;
    for (size_t i = 0; i < vcf_samples.size(); ++i) {
      vcf_row[vcf_samples[i]] = static_cast<Eigen::Index>(i);
    }
    for (auto& [gene, block] : vcf_genes) {
      Eigen::MatrixXd m(n, block.matrix.cols());
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto it = vcf_row.find(ds.sample_ids[static_cast<size_t>(i)]);
        if (it == vcf_row.end()) {
          throw ParseError("sample " + ds.sample_ids[static_cast<size_t>(i)] +
                           " missing from " + geno_path);
        }
        m.row(i) = block.matrix.row(it->second);
      }
      ds.genes[gene] = build_genotype_block(std::move(m), block.variant_ids);
    }
    return ds;
  }

  // TSV layout: gene_id, variant_id, then one dosage column per sample
  std::ifstream in = open_or_throw(geno_path);
  std::string line;
  size_t lineno = 0;
  std::vector<std::string> geno_samples;
  struct Row {
    std::string gene, variant;
    std::vector<double> dosages;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (lineno == 1) {
      if (fields.size() < 3 || fields[0] != "gene_id" || fields[1] != "variant_id") {
        throw ParseError(geno_path + ": header must start gene_id/variant_id");
      }
      geno_samples.assign(fields.begin() + 2, fields.end());
      continue;
    }
    if (fields.size() != geno_samples.size() + 2) {
      throw ParseError(geno_path + ": ragged row at line " + std::to_string(lineno));
    }
    Row row;
    row.gene = fields[0];
    row.variant = fields[1];
    for (size_t j = 2; j < fields.size(); ++j) {
      double v;
      if (!parse_double(fields[j], &v)) {
        throw ParseError(geno_path + ": non-numeric dosage at line " +
                         std::to_string(lineno));
      }
      if (!std::isnan(v) && (v < 0.0 || v > 2.0)) {
        throw ParseError(geno_path + ": dosage outside [0,2] at line " +
                         std::to_string(lineno));
      }
      row.dosages.push_back(v);
    }
    rows.push_back(std::move(row));
  }

  std::map<std::string, Eigen::Index> geno_col;
  for (size_t i = 0; i < geno_samples.size(); ++i) {
    geno_col[geno_samples[i]] = static_cast<Eigen::Index>(i);
  }
  std::map<std::string, std::vector<const Row*>> by_gene;
  std::vector<std::string> gene_order;
  for (const auto& row : rows) {
    if (by_gene.find(row.gene) == by_gene.end()) gene_order.push_back(row.gene);
    by_gene[row.gene].push_back(&row);
  }
  for (const auto& gene : gene_order) {
    const auto& gene_rows = by_gene[gene];
    Eigen::MatrixXd m(n, static_cast<Eigen::Index>(gene_rows.size()));
    std::vector<std::string> ids;
    for (size_t j = 0; j < gene_rows.size(); ++j) {
      ids.push_back(gene_rows[j]->variant);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto it = geno_col.find(ds.sample_ids[static_cast<size_t>(i)]);
        if (it == geno_col.end()) {
          throw ParseError("sample " + ds.sample_ids[static_cast<size_t>(i)] +
                           " missing from " + geno_path);
        }
        m(i, static_cast<Eigen::Index>(j)) = gene_rows[j]->dosages[static_cast<size_t>(it->second)];
      }
    }
    mean_impute(m);
    ds.genes[gene] = build_genotype_block(std::move(m), std::move(ids));
  }
  return ds;
}

std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::map<std::string, std::string> kv;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t");
    line = line.substr(first, last - first + 1);
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(path + ": expected key=value at line " + std::to_string(lineno));
    }
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      if (a == std::string::npos) return std::string();
      const auto b = s.find_last_not_of(" \t");
      return s.substr(a, b - a + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

SimConfig sim_config_from(const std::map<std::string, std::string>& kv) {
  SimConfig config;
  auto get = [&](const char* key) -> const std::string* {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  if (auto* v = get("model")) config.model = parse_sim_model(*v);
  if (auto* v = get("error")) config.error = parse_error_law(*v);
  if (auto* v = get("beta")) config.beta = std::stod(*v);
  if (auto* v = get("gamma")) config.gamma = std::stod(*v);
  if (auto* v = get("causal_common")) config.causal_common_rate = std::stod(*v);
  if (auto* v = get("causal_rare")) config.causal_rare_rate = std::stod(*v);
  if (auto* v = get("n")) config.n = std::stol(*v);
  if (auto* v = get("region_variants")) config.region_variants = std::stol(*v);
  if (auto* v = get("pool_haplotypes")) config.pool_haplotypes = std::stol(*v);
  if (auto* v = get("pool_sites")) config.pool_sites = std::stol(*v);
  if (auto* v = get("grid_size")) config.grid_size = std::stol(*v);
  if (auto* v = get("seed")) config.seed = std::stoull(*v);
  if (auto* v = get("alpha_levels")) {
    config.alpha_levels.clear();
    std::stringstream ss(*v);
    std::string tok;
    while (std::getline(ss, tok, ',')) config.alpha_levels.push_back(std::stod(tok));
  }
  return config;
}

namespace {

using nlohmann::json;

json optional_to_json(const std::optional<double>& v) {
  if (v) return *v;
  return nullptr;
}

std::optional<double> optional_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

std::string report_to_json(const GeneTestReport& report) {
  json j;
  j["gene_id"] = report.gene_id;
  j["n"] = report.n;
  j["p_common"] = report.p_common;
  j["p_rare"] = report.p_rare;
  j["components"] = json::array();
  for (const auto& c : report.components) {
    json jc;
    jc["stratum"] = stratum_name(c.stratum);
    jc["score"] = score_name(c.score);
    jc["form"] = stat_name(c.result.statistic_kind);
    jc["statistic"] = c.result.statistic;
    jc["p_value"] = c.result.p_value;
    j["components"].push_back(jc);
  }
  j["cauchy_common_qs"] = optional_to_json(report.cauchy_common_qs);
  j["cauchy_rare_qs"] = optional_to_json(report.cauchy_rare_qs);
  j["cauchy_common_qb"] = optional_to_json(report.cauchy_common_qb);
  j["cauchy_rare_qb"] = optional_to_json(report.cauchy_rare_qb);
  j["p_iqrat_qs"] = optional_to_json(report.p_iqrat_qs);
  j["p_iqrat_qb"] = optional_to_json(report.p_iqrat_qb);
  j["baseline_skat_p"] = optional_to_json(report.baseline_skat_p);
  j["baseline_burden_p"] = optional_to_json(report.baseline_burden_p);
  j["flags"] = report.flags;
  return j.dump(2);
}

GeneTestReport report_from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  GeneTestReport report;
  report.gene_id = j.at("gene_id").get<std::string>();
  report.n = j.at("n").get<Eigen::Index>();
  report.p_common = j.at("p_common").get<Eigen::Index>();
  report.p_rare = j.at("p_rare").get<Eigen::Index>();
  for (const auto& jc : j.at("components")) {
    GeneTestReport::Component c;
    const std::string stratum = jc.at("stratum").get<std::string>();
    c.stratum = stratum == "common" ? Stratum::Common : Stratum::Rare;
    const std::string score = jc.at("score").get<std::string>();
    c.score = score == "wilcoxon"
                  ? ScoreKind::Wilcoxon
                  : (score == "normal" ? ScoreKind::NormalScore : ScoreKind::Lehmann);
    const std::string form = jc.at("form").get<std::string>();
    c.result.statistic_kind = form == "qs" ? StatKind::QS : StatKind::QB;
    c.result.statistic = jc.at("statistic").get<double>();
    c.result.p_value = jc.at("p_value").get<double>();
    c.result.score_kind = c.score;
    report.components.push_back(std::move(c));
  }
  report.cauchy_common_qs = optional_from_json(j.at("cauchy_common_qs"));
  report.cauchy_rare_qs = optional_from_json(j.at("cauchy_rare_qs"));
  report.cauchy_common_qb = optional_from_json(j.at("cauchy_common_qb"));
  report.cauchy_rare_qb = optional_from_json(j.at("cauchy_rare_qb"));
  report.p_iqrat_qs = optional_from_json(j.at("p_iqrat_qs"));
  report.p_iqrat_qb = optional_from_json(j.at("p_iqrat_qb"));
  report.baseline_skat_p = optional_from_json(j.at("baseline_skat_p"));
  report.baseline_burden_p = optional_from_json(j.at("baseline_burden_p"));
  report.flags = j.at("flags").get<std::vector<std::string>>();
  return report;
}

namespace {

std::string opt_str(const std::optional<double>& v) {
  return v ? format_double(*v) : "NA";
}

}  // namespace

namespace {

// (stratum, score, form) triples in the fixed column order of the TSV mirror
struct ComponentColumn {
  Stratum stratum;
  ScoreKind score;
  StatKind form;
};

const ComponentColumn kComponentColumns[] = {
    {Stratum::Common, ScoreKind::Wilcoxon, StatKind::QS},
    {Stratum::Common, ScoreKind::NormalScore, StatKind::QS},
    {Stratum::Common, ScoreKind::Lehmann, StatKind::QS},
    {Stratum::Rare, ScoreKind::Wilcoxon, StatKind::QS},
    {Stratum::Rare, ScoreKind::NormalScore, StatKind::QS},
    {Stratum::Common, ScoreKind::Wilcoxon, StatKind::QB},
    {Stratum::Common, ScoreKind::NormalScore, StatKind::QB},
    {Stratum::Common, ScoreKind::Lehmann, StatKind::QB},
    {Stratum::Rare, ScoreKind::Wilcoxon, StatKind::QB},
    {Stratum::Rare, ScoreKind::NormalScore, StatKind::QB},
};

}  // namespace

std::string report_tsv_header() {
  std::ostringstream ss;
  ss << "gene_id\tn\tp_common\tp_rare";
  for (const auto& col : kComponentColumns) {
    ss << "\tp_" << stat_name(col.form) << '_' << stratum_name(col.stratum) << '_'
       << score_name(col.score);
  }
  ss << "\tcauchy_common_qs\tcauchy_rare_qs\tcauchy_common_qb\tcauchy_rare_qb"
        "\tp_iqrat_qs\tp_iqrat_qb\tbaseline_skat_p\tbaseline_burden_p\tflags";
  return ss.str();
}

std::string report_to_tsv_row(const GeneTestReport& report) {
  std::ostringstream ss;
  ss << report.gene_id << '\t' << report.n << '\t' << report.p_common << '\t'
     << report.p_rare;
  for (const auto& col : kComponentColumns) {
    const AssocResult* r = report.find(col.stratum, col.score, col.form);
    ss << '\t' << (r ? format_double(r->p_value) : "NA");
  }
  ss << '\t' << opt_str(report.cauchy_common_qs) << '\t'
     << opt_str(report.cauchy_rare_qs) << '\t' << opt_str(report.cauchy_common_qb)
     << '\t' << opt_str(report.cauchy_rare_qb) << '\t' << opt_str(report.p_iqrat_qs)
     << '\t' << opt_str(report.p_iqrat_qb) << '\t' << opt_str(report.baseline_skat_p)
     << '\t' << opt_str(report.baseline_burden_p) << '\t';
  for (size_t i = 0; i < report.flags.size(); ++i) {
    if (i) ss << ',';
    ss << report.flags[i];
  }
  if (report.flags.empty()) ss << '.';
  return ss.str();
}

void write_experiment_tsv(std::ostream& os, const ExperimentResult& result) {
  os << "test\talpha\trate\tmc_se\treplicates\n";
  for (const auto& cell : result.cells) {
    os << cell.test << '\t' << format_double(cell.alpha) << '\t'
       << format_double(cell.rate) << '\t' << format_double(cell.mc_se) << '\t'
       << cell.replicates << '\n';
  }
}

void write_efficiency_tsv(std::ostream& os, const std::vector<EfficiencyPoint>& points) {
  os << "alternative\tparameter\tr2_wilcoxon\tr2_normal\tr2_lehmann\tr2_mean\n";
  for (const auto& pt : points) {
    os << (pt.alternative == Alternative::Location ? "location" : "lehmann") << '\t'
       << format_double(pt.parameter) << '\t' << format_double(pt.r2_wilcoxon) << '\t'
       << format_double(pt.r2_normal) << '\t' << format_double(pt.r2_lehmann) << '\t'
       << format_double(pt.r2_mean_based) << '\n';
  }
}

void write_dataset_tsv(const std::string& prefix, const Eigen::VectorXd& y,
                       const Eigen::MatrixXd& covariates,
                       const std::map<std::string, GenotypeBlock>& genes) {
  const Eigen::Index n = y.size();
  {
    std::ofstream out(prefix + ".pheno.tsv");
    out << "sample_id\tphenotype\n";
    for (Eigen::Index i = 0; i < n; ++i) {
      out << "s" << i << '\t' << format_double(y[i]) << '\n';
    }
  }
  {
    std::ofstream out(prefix + ".covar.tsv");
    out << "sample_id";
    for (Eigen::Index j = 0; j < covariates.cols(); ++j) out << "\tc" << j;
    out << '\n';
    for (Eigen::Index i = 0; i < n; ++i) {
      out << "s" << i;
      for (Eigen::Index j = 0; j < covariates.cols(); ++j) {
        out << '\t' << format_double(covariates(i, j));
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(prefix + ".geno.tsv");
    out << "gene_id\tvariant_id";
    for (Eigen::Index i = 0; i < n; ++i) out << "\ts" << i;
    out << '\n';
    for (const auto& [gene, block] : genes) {
      for (Eigen::Index j = 0; j < block.matrix.cols(); ++j) {
        out << gene << '\t' << block.variant_ids[static_cast<size_t>(j)];
        for (Eigen::Index i = 0; i < n; ++i) {
          out << '\t' << format_double(block.matrix(i, j));
        }
        out << '\n';
      }
    }
  }
}

}  // namespace iqrat
