#include "attnmil/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "attnmil/error.hpp"

namespace attnmil {

GradCheckReport grad_check(const std::function<double()>& loss, std::span<double* const> params,
                           std::span<const double> analytic, double h, double tolerance,
                           std::size_t max_samples, Rng* rng) {
  require(params.size() == analytic.size(), "grad_check: parameter and gradient counts differ");
  require(h > 0.0, "grad_check: step must be positive");

  std::vector<std::size_t> indices(params.size());
  std::iota(indices.begin(), indices.end(), 0);
  if (max_samples > 0 && max_samples < indices.size()) {
    require(rng != nullptr, "grad_check: sampling needs an rng");
    rng->shuffle(std::span(indices));
    indices.resize(max_samples);
    std::sort(indices.begin(), indices.end());
  }

  GradCheckReport report;
  for (auto i : indices) {
    double& p = *params[i];
    const double saved = p;
    p = saved + h;
    const double up = loss();
    p = saved - h;
    const double down = loss();
    p = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double a = analytic[i];
    const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-12});
    if (rel > report.max_relative_error) {
      report.max_relative_error = rel;
      report.worst_index = i;
    }
    ++report.checked;
  }
  report.passed = report.max_relative_error < tolerance;
  return report;
}

}  // namespace attnmil
