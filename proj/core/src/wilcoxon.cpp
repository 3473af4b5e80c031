#include "attnmil/wilcoxon.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "attnmil/error.hpp"

namespace attnmil {

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "wilcoxon: samples have different lengths");
  require(!a.empty(), "wilcoxon: no pairs");

  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) d.push_back(a[i] - b[i]);

  WilcoxonResult result;
  result.n_nonzero = d.size();
  if (d.empty()) return result;

  const std::size_t m = d.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return std::abs(d[x]) < std::abs(d[y]); });

  // Doubled mid-ranks keep everything integral.
  std::vector<std::uint32_t> rank2(m);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < m;) {
    std::size_t j = i;
    while (j < m && std::abs(d[order[j]]) == std::abs(d[order[i]])) ++j;
    const auto mid2 = static_cast<std::uint32_t>(i + 1 + j);  // (i+1) + j = 2 * mean rank
    for (std::size_t k = i; k < j; ++k) rank2[order[k]] = mid2;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }

  std::uint64_t plus2 = 0, total2 = 0;
  for (std::size_t i = 0; i < m; ++i) {
    total2 += rank2[i];
    if (d[i] > 0) plus2 += rank2[i];
  }
  const std::uint64_t stat2 = std::min(plus2, total2 - plus2);
  result.w_plus = static_cast<double>(plus2) / 2.0;
  result.statistic = static_cast<double>(stat2) / 2.0;

  if (m <= kWilcoxonExactLimit) {
    // counts[s] = number of sign assignments whose doubled W+ equals s.
    std::vector<std::uint64_t> counts(total2 + 1, 0);
    counts[0] = 1;
    std::uint64_t reach = 0;
    for (auto r : rank2) {
      for (std::uint64_t s = reach + 1; s-- > 0;)
        if (counts[s]) counts[s + r] += counts[s];
      reach += r;
    }
    std::uint64_t extreme = 0;
    for (std::uint64_t s = 0; s <= total2; ++s)
      if (std::min(s, total2 - s) <= stat2) extreme += counts[s];
    result.p_value = static_cast<double>(extreme) / std::ldexp(1.0, static_cast<int>(m));
    result.exact = true;
    return result;
  }

  const double n = static_cast<double>(m);
  const double mean = n * (n + 1.0) / 4.0;
  const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
  result.exact = false;
  if (var <= 0.0) return result;
  const double z = std::max(0.0, std::abs(result.w_plus - mean) - 0.5) / std::sqrt(var);
  result.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return result;
}

}  // namespace attnmil
