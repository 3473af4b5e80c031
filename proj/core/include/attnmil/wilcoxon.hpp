#pragma once

#include <cstddef>
#include <span>

namespace attnmil {

struct WilcoxonResult {
  double p_value = 1.0;    // two-sided
  double statistic = 0.0;  // min(W+, W-)
  double w_plus = 0.0;
  std::size_t n_nonzero = 0;
  bool exact = true;
};

inline constexpr std::size_t kWilcoxonExactLimit = 20;

/// Paired signed-rank test on d = a - b. Zero differences are dropped, tied
/// |d| get mid-ranks. With at most 20 nonzero differences the null
/// distribution is counted exactly over all 2^m sign assignments and
/// p = P(min(W+, W-) <= observed); beyond that a normal approximation with
/// tie-corrected variance and continuity correction is used. No nonzero
/// differences gives p = 1.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

}  // namespace attnmil
