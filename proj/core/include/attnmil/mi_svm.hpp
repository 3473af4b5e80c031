#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "attnmil/dataset.hpp"
#include "attnmil/training.hpp"

namespace attnmil {

struct MiSvmModel {
  Vector weights;
  double bias = 0.0;
  double lambda = 0.01;

  std::size_t feature_dim() const { return static_cast<std::size_t>(weights.size()); }
  double decision(const Eigen::Ref<const Vector>& x) const { return weights.dot(x) + bias; }
  void validate() const;
};

/// Primal linear SVM, lambda/2 |w|^2 + mean hinge, by Pegasos-style
/// sub-gradient steps with rate 1/(lambda t). The bias is unregularized.
/// `targets` are +1 / -1, one per row of `samples`.
MiSvmModel fit_linear_svm(const Matrix& samples, std::span<const int> targets, double lambda,
                          std::size_t epochs, Rng& rng);

/// MI-SVM witness alternation: positive bags start from their centroid (a
/// single-instance bag starts from its only instance), then repeatedly pick the
/// instance with the largest decision value and refit on those witnesses plus
/// every negative instance, until the selection stops changing.
MiSvmModel train_misvm(std::span<const Bag> train_bags, const SvmConfig& config, Rng& rng);

struct MiSvmScore {
  double score;  // max_k (w . x_k + b)
  int label;
};

MiSvmScore misvm_score(const MiSvmModel& model, const Bag& bag);

}  // namespace attnmil
