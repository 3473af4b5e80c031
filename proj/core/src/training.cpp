#include "attnmil/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "attnmil/error.hpp"

namespace attnmil {

std::string_view to_string(Pooling pooling) { return pooling == Pooling::max ? "max" : "mean"; }

Pooling parse_pooling(std::string_view name) {
  if (name == "max") return Pooling::max;
  if (name == "mean") return Pooling::mean;
  fail("unknown pooling '" + std::string(name) + "' (expected max or mean)");
}

void TrainConfig::validate() const {
  require(epochs >= 1, "train config: epochs must be at least 1");
  require(learning_rate > 0.0 && std::isfinite(learning_rate), "train config: learning rate must be positive");
  require(!pad_duplicate || pad_target >= 1, "train config: padding target must be positive");
  require(architecture.embedding_dim >= 1 && architecture.attention_dim >= 1,
          "train config: embedding and attention widths must be positive");
  for (auto width : architecture.hidden_dims) require(width >= 1, "train config: hidden widths must be positive");
  require(architecture.dropout >= 0.0 && architecture.dropout < 1.0, "train config: dropout must lie in [0, 1)");
  require(svm.lambda > 0.0, "train config: svm lambda must be positive");
  require(svm.inner_epochs >= 1 && svm.max_outer_iters >= 1, "train config: svm iteration counts must be positive");
}

BceLoss bce_loss(double probability, int label) {
  const double p = std::clamp(probability, kProbabilityClamp, 1.0 - kProbabilityClamp);
  if (label == 1) return {-std::log(p), -1.0 / p};
  return {-std::log1p(-p), 1.0 / (1.0 - p)};
}

TrainingLog run_sgd_epochs(std::span<const Bag> bags, std::size_t epochs, Rng& rng,
                           const std::function<double(const Bag&)>& step) {
  require(!bags.empty(), "training: no bags");
  TrainingLog log;
  log.epoch_loss.reserve(epochs);
  std::vector<std::size_t> order(bags.size());
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span(order));
    double total = 0.0;
    for (auto i : order) total += step(bags[i]);
    log.epoch_loss.push_back(total / static_cast<double>(bags.size()));
  }
  return log;
}

void require_both_classes(std::span<const Bag> bags, std::string_view who) {
  bool pos = false, neg = false;
  for (const auto& bag : bags) (bag.label == 1 ? pos : neg) = true;
  if (!pos) fail(std::string(who) + ": training set has no positive bags");
  if (!neg) fail(std::string(who) + ": training set has no negative bags");
}

}  // namespace attnmil
