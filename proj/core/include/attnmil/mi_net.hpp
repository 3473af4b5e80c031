#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "attnmil/dataset.hpp"
#include "attnmil/nn.hpp"
#include "attnmil/training.hpp"

namespace attnmil {

/// Embedding-level MIL baseline: shared transformation network, element-wise
/// max or mean pooling, sigmoid head.
struct MiNetModel {
  nn::LayerStack transform;
  nn::DenseLayer head;
  Pooling pooling = Pooling::max;
  std::size_t pad_target = 0;

  std::size_t feature_dim() const { return transform.in_dim(); }
  void validate() const;
};

MiNetModel init_mi_net(std::size_t feature_dim, const Architecture& architecture, Pooling pooling, Rng& rng);

struct MiNetForward {
  double probability = 0.5;
  Matrix embeddings;
  nn::GradientTape transform_tape;
  std::vector<Eigen::Index> argmax;  // per embedding column, max pooling only
  nn::LayerTrace head_trace;
};

MiNetForward minet_forward(const MiNetModel& model, const Bag& bag, nn::Mode mode, Rng& rng);

struct MiNetGradient {
  nn::StackGradient transform;
  nn::LayerGradient head;

  static MiNetGradient zeros_like(const MiNetModel& model);
  void set_zero();
};

void minet_backward(const MiNetModel& model, const MiNetForward& pass, double loss_grad, MiNetGradient& accum);
void sgd_step(MiNetModel& model, const MiNetGradient& gradient, double learning_rate);

void collect_parameters(MiNetModel& model, std::vector<double*>& out);
void flatten(const MiNetGradient& gradient, std::vector<double>& out);

double minet_probability(const MiNetModel& model, const Bag& bag);

struct MiNetTraining {
  MiNetModel model;
  TrainingLog log;
};

MiNetTraining train_mi_net(std::span<const Bag> train_bags, const TrainConfig& config, Rng& rng);

}  // namespace attnmil
