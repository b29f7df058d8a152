#ifndef IQRAT_SCORES_HPP
#define IQRAT_SCORES_HPP

#include <Eigen/Dense>

#include "iqrat/qr_process.hpp"

namespace iqrat {

enum class ScoreKind { Wilcoxon, NormalScore, Lehmann };

const char* score_name(ScoreKind kind);

// Non-decreasing square-integrable weight function on (0,1):
//   Wilcoxon     phi(t) = t
//   NormalScore  phi(t) = Phi^{-1}(t)
//   Lehmann      phi(t) = -log(1-t) - 1
struct ScoreFunction {
  ScoreKind kind = ScoreKind::Wilcoxon;

  double operator()(double t) const;
};

// Exact closed form of the integral of phi over [a,b], 0 <= a < b <= 1.
// The unbounded tails of the Normal and Lehmann scores have finite
// integrals; the conventions phi-pdf(+-inf) = 0 and the t -> 1 limit of the
// Lehmann antiderivative make the boundary segments exact too.
double segment_integral(const ScoreFunction& score, double a, double b);

// sigma^2_phi = integral of (phi - mean)^2 over (0,1).
double score_variance(const ScoreFunction& score);

// Per-subject integrated rank scores phi_i.
struct IntegratedScores {
  Eigen::VectorXd values;
  ScoreFunction score;
  QuantileGrid grid;
};

// phi_i = sum_j [(a_i(t_j) - a_i(t_{j-1})) / (t_j - t_{j-1})] * int_{t_{j-1}}^{t_j} phi,
// summed over the grid augmented with boundary knots at 0 and 1 where the
// rank-score process is pinned to zero.
IntegratedScores integrate_rank_scores(const RankScoreMatrix& rs,
                                       const ScoreFunction& score);

}  // namespace iqrat

#endif
