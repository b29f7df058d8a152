#include "iqrat/scores.hpp"

#include <cmath>
#include <stdexcept>

#include "iqrat/numerics.hpp"

namespace iqrat {

const char* score_name(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::Wilcoxon: return "wilcoxon";
    case ScoreKind::NormalScore: return "normal";
    case ScoreKind::Lehmann: return "lehmann";
  }
  return "?";
}

double ScoreFunction::operator()(double t) const {
  switch (kind) {
    case ScoreKind::Wilcoxon: return t;
    case ScoreKind::NormalScore: return normal_quantile(t);
    case ScoreKind::Lehmann: return -std::log1p(-t) - 1.0;
  }
  return 0.0;
}

namespace {

// antiderivative pieces used by segment_integral
double lehmann_antiderivative(double t) {
  // (1-t)(1 - log(1-t)), with the t -> 1 limit 0
  if (t >= 1.0) return 0.0;
  double s = 1.0 - t;
  return s * (1.0 - std::log(s));
}

double normal_tail_pdf(double t) {
  // pdf(Phi^{-1}(t)), with pdf(Phi^{-1}(0)) = pdf(Phi^{-1}(1)) = 0
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return normal_pdf(normal_quantile(t));
}

}  // namespace

double segment_integral(const ScoreFunction& score, double a, double b) {
  if (!(a >= 0.0 && a < b && b <= 1.0)) {
    throw std::domain_error("segment_integral: require 0 <= a < b <= 1");
  }
  switch (score.kind) {
    case ScoreKind::Wilcoxon:
      return 0.5 * (b - a) * (b + a);
    case ScoreKind::NormalScore:
      return normal_tail_pdf(a) - normal_tail_pdf(b);
    case ScoreKind::Lehmann:
      return lehmann_antiderivative(a) - lehmann_antiderivative(b) - (b - a);
  }
  return 0.0;
}

double score_variance(const ScoreFunction& score) {
  switch (score.kind) {
    case ScoreKind::Wilcoxon: return 1.0 / 12.0;
    case ScoreKind::NormalScore: return 1.0;
    case ScoreKind::Lehmann: return 1.0;
  }
  return 0.0;
}

IntegratedScores integrate_rank_scores(const RankScoreMatrix& rs,
                                       const ScoreFunction& score) {
  const Eigen::Index n = rs.values.rows();
  const Eigen::Index g = rs.grid.size();
  const Eigen::VectorXd& tau = rs.grid.levels;

  IntegratedScores out;
  out.score = score;
  out.grid = rs.grid;
  out.values = Eigen::VectorXd::Zero(n);

  // segments of the augmented grid 0 = t_0 < t_1 < ... < t_G < t_{G+1} = 1,
  // with the process pinned to 0 at both boundary knots
  for (Eigen::Index j = 0; j <= g; ++j) {
    const double lo = (j == 0) ? 0.0 : tau[j - 1];
    const double hi = (j == g) ? 1.0 : tau[j];
    const double weight = segment_integral(score, lo, hi) / (hi - lo);
    if (j == 0) {
      out.values += weight * rs.values.col(0);
    } else if (j == g) {
      out.values -= weight * rs.values.col(g - 1);
    } else {
      out.values += weight * (rs.values.col(j) - rs.values.col(j - 1));
    }
  }
  return out;
}

}  // namespace iqrat
