#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "attnmil/rng.hpp"

namespace attnmil {

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  bool passed = true;
};

/// Compares `analytic[i]` with the central difference (L(p+h) - L(p-h)) / 2h for
/// each parameter `*params[i]`, perturbing it in place and restoring it after.
/// Relative error is |a - n| / max(|a|, |n|, 1e-12). When `max_samples` is
/// nonzero and smaller than the parameter count, a uniform subset is checked.
GradCheckReport grad_check(const std::function<double()>& loss, std::span<double* const> params,
                           std::span<const double> analytic, double h, double tolerance,
                           std::size_t max_samples = 0, Rng* rng = nullptr);

}  // namespace attnmil
