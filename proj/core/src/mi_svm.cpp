#include "attnmil/mi_svm.hpp"

#include <cmath>
#include <numeric>
#include <optional>

#include "attnmil/error.hpp"

namespace attnmil {

void MiSvmModel::validate() const {
  require(weights.size() > 0, "mi-svm: empty weight vector");
  require(weights.allFinite() && std::isfinite(bias), "mi-svm: non-finite parameters");
  require(lambda > 0.0, "mi-svm: lambda must be positive");
}

MiSvmModel fit_linear_svm(const Matrix& samples, std::span<const int> targets, double lambda,
                          std::size_t epochs, Rng& rng) {
  require(samples.rows() > 0 && static_cast<std::size_t>(samples.rows()) == targets.size(),
          "linear svm: need one target per sample");
  require(lambda > 0.0, "linear svm: lambda must be positive");
  MiSvmModel model;
  model.lambda = lambda;
  model.weights = Vector::Zero(samples.cols());

  std::vector<std::size_t> order(targets.size());
  std::uint64_t t = 0;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span(order));
    for (auto i : order) {
      ++t;
      const double rate = 1.0 / (lambda * static_cast<double>(t));
      const double y = targets[i];
      const auto x = samples.row(static_cast<Eigen::Index>(i)).transpose();
      const double margin = y * model.decision(x);
      model.weights *= 1.0 - rate * lambda;
      if (margin < 1.0) {
        model.weights.noalias() += (rate * y) * x;
        model.bias += rate * y;
      }
    }
  }
  return model;
}

MiSvmModel train_misvm(std::span<const Bag> train_bags, const SvmConfig& config, Rng& rng) {
  require(!train_bags.empty(), "train_misvm: no training bags");
  require_both_classes(train_bags, "train_misvm");
  require(config.lambda > 0.0, "train_misvm: lambda must be positive");
  const auto dim = train_bags.front().instances.cols();

  std::vector<const Bag*> positives;
  Eigen::Index negative_rows = 0;
  for (const auto& bag : train_bags) {
    require(bag.size() >= 1, "train_misvm: bag '" + bag.id + "' is empty");
    require(bag.instances.cols() == dim, "train_misvm: bags disagree on feature dimension");
    if (bag.label == 1)
      positives.push_back(&bag);
    else
      negative_rows += bag.instances.rows();
  }

  const auto n_pos = static_cast<Eigen::Index>(positives.size());
  Matrix samples(n_pos + negative_rows, dim);
  std::vector<int> targets(static_cast<std::size_t>(samples.rows()), -1);
  Eigen::Index row = n_pos;
  for (const auto& bag : train_bags) {
    if (bag.label == 1) continue;
    samples.middleRows(row, bag.instances.rows()) = bag.instances;
    row += bag.instances.rows();
  }
  for (Eigen::Index p = 0; p < n_pos; ++p) targets[static_cast<std::size_t>(p)] = 1;

  // nullopt marks a centroid start.
  std::vector<std::optional<Eigen::Index>> selection(positives.size());
  for (std::size_t p = 0; p < positives.size(); ++p) {
    const auto& bag = *positives[p];
    if (bag.size() == 1) selection[p] = 0;
    if (selection[p])
      samples.row(static_cast<Eigen::Index>(p)) = bag.instances.row(0);
    else
      samples.row(static_cast<Eigen::Index>(p)) = bag.instances.colwise().mean();
  }

  MiSvmModel model;
  for (std::size_t iter = 0; iter < config.max_outer_iters; ++iter) {
    model = fit_linear_svm(samples, targets, config.lambda, config.inner_epochs, rng);
    bool changed = false;
    for (std::size_t p = 0; p < positives.size(); ++p) {
      const auto& bag = *positives[p];
      Eigen::Index best = 0;
      double best_value = model.decision(bag.instances.row(0).transpose());
      for (Eigen::Index k = 1; k < bag.instances.rows(); ++k) {
        double value = model.decision(bag.instances.row(k).transpose());
        if (value > best_value) {
          best_value = value;
          best = k;
        }
      }
      if (selection[p] != best) {
        changed = true;
        selection[p] = best;
        samples.row(static_cast<Eigen::Index>(p)) = bag.instances.row(best);
      }
    }
    if (!changed) break;
  }
  return model;
}

MiSvmScore misvm_score(const MiSvmModel& model, const Bag& bag) {
  require(bag.size() >= 1, "mi-svm: bag '" + bag.id + "' is empty");
  require(bag.dim() == model.feature_dim(), "mi-svm: bag '" + bag.id + "' has " + std::to_string(bag.dim()) +
                                                " features, model expects " + std::to_string(model.feature_dim()));
  const double score = ((bag.instances * model.weights).array() + model.bias).maxCoeff();
  return {score, score >= 0.0 ? 1 : 0};
}

}  // namespace attnmil
