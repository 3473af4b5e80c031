#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "attnmil/dataset.hpp"
#include "attnmil/rng.hpp"

namespace attnmil {

enum class Pooling { max, mean };

std::string_view to_string(Pooling pooling);
Pooling parse_pooling(std::string_view name);

/// Transformation network shape shared by the attention model and MI-Net:
/// feature_dim -> hidden_dims... (relu, dropout) -> embedding_dim (identity).
struct Architecture {
  std::vector<std::size_t> hidden_dims{64, 32};
  std::size_t embedding_dim = 32;
  std::size_t attention_dim = 16;
  double dropout = 0.5;
};

struct SvmConfig {
  double lambda = 0.01;
  std::size_t inner_epochs = 200;
  std::size_t max_outer_iters = 20;
};

struct TrainConfig {
  double learning_rate = 1e-4;
  std::size_t epochs = 500;
  std::uint64_t seed = 0;
  std::size_t oversample = 0;
  bool pad_duplicate = false;
  std::size_t pad_target = kDefaultPadTarget;
  bool standardize = true;
  Architecture architecture;
  Pooling pooling = Pooling::max;
  SvmConfig svm;

  void validate() const;
};

struct BceLoss {
  double loss;
  double gradient;  // d loss / d probability
};

inline constexpr double kProbabilityClamp = 1e-12;

/// Binary cross-entropy on a probability clamped to [1e-12, 1 - 1e-12].
BceLoss bce_loss(double probability, int label);

inline int threshold_label(double probability) { return probability >= 0.5 ? 1 : 0; }

struct TrainingLog {
  std::vector<double> epoch_loss;  // mean per-bag loss of each epoch
};

/// Batch-size-one SGD driver: each epoch shuffles the bag order with `rng`
/// and calls `step` once per bag. `step` returns that bag's loss.
TrainingLog run_sgd_epochs(std::span<const Bag> bags, std::size_t epochs, Rng& rng,
                           const std::function<double(const Bag&)>& step);

void require_both_classes(std::span<const Bag> bags, std::string_view who);

}  // namespace attnmil
