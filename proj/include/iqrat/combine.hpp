#ifndef IQRAT_COMBINE_HPP
#define IQRAT_COMBINE_HPP

#include <optional>
#include <vector>

namespace iqrat {

// Cauchy combination: T = mean of tan((0.5 - p_i) pi), returned as the
// standard-Cauchy upper tail of T. Stable for p down to the 1e-300 floor.
double cauchy_combine(const std::vector<double>& ps);

// Fisher's method: -2 sum log p_i ~ chi^2_{2K}.
double fisher_combine(const std::vector<double>& ps);

struct BhResult {
  std::vector<bool> reject;            // aligned with the input order
  std::optional<double> threshold_p;   // smallest insignificant p, if any
};

// Benjamini-Hochberg step-up procedure at level alpha.
BhResult bh_fdr(const std::vector<double>& ps, double alpha);

}  // namespace iqrat

#endif
