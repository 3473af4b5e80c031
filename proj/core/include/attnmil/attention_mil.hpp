#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "attnmil/dataset.hpp"
#include "attnmil/nn.hpp"
#include "attnmil/training.hpp"

namespace attnmil {

/// score_k = projection . tanh(hidden * h_k), alpha = softmax(score).
struct AttentionParams {
  Matrix hidden;      // attention_dim x embedding_dim
  Vector projection;  // attention_dim
};

struct AttentionPool {
  Vector embedding;  // sum_k alpha_k h_k
  Vector weights;    // alpha
  Vector scores;
  Matrix activations;  // tanh(hidden * h_k), one row per instance
};

AttentionPool attention_pool(const Matrix& embeddings, const AttentionParams& attention);

/// Per-instance attention of one bag. Weights are comparable only within the bag.
struct AttentionReport {
  std::string bag_id;
  std::vector<double> weights;
  std::vector<bool> padding;

  // Sums the weight of duplicated slots back onto the instance they copy.
  std::vector<double> collapse_padding() const;
};

struct AttentionMilModel {
  nn::LayerStack transform;
  AttentionParams attention;
  nn::DenseLayer head;  // embedding_dim -> 1, sigmoid
  // 0 keeps bags variable-length; otherwise bags are duplicate-padded to this size.
  std::size_t pad_target = 0;

  std::size_t feature_dim() const { return transform.in_dim(); }
  std::size_t embedding_dim() const { return transform.out_dim(); }
  void validate() const;
};

AttentionMilModel init_attention_mil(std::size_t feature_dim, const Architecture& architecture, Rng& rng);

// Applies the model's padding policy to a raw bag.
Bag prepare_bag(std::size_t pad_target, const Bag& bag);

struct AttentionMilForward {
  double probability = 0.5;
  AttentionReport report;
  Matrix embeddings;
  nn::GradientTape transform_tape;
  AttentionPool pool;
  nn::LayerTrace head_trace;
};

AttentionMilForward attn_mil_forward(const AttentionMilModel& model, const Bag& bag, nn::Mode mode, Rng& rng);

struct AttentionMilGradient {
  nn::StackGradient transform;
  Matrix hidden;
  Vector projection;
  nn::LayerGradient head;

  static AttentionMilGradient zeros_like(const AttentionMilModel& model);
  void set_zero();
};

void attn_mil_backward(const AttentionMilModel& model, const AttentionMilForward& pass, double loss_grad,
                       AttentionMilGradient& accum);
void sgd_step(AttentionMilModel& model, const AttentionMilGradient& gradient, double learning_rate);

void collect_parameters(AttentionMilModel& model, std::vector<double*>& out);
void flatten(const AttentionMilGradient& gradient, std::vector<double>& out);

struct AttentionPrediction {
  double probability;
  int label;
  AttentionReport report;
};

AttentionPrediction predict_bag(const AttentionMilModel& model, const Bag& bag);

struct AttentionMilTraining {
  AttentionMilModel model;
  TrainingLog log;
};

AttentionMilTraining train_attention_mil(std::span<const Bag> train_bags, const TrainConfig& config, Rng& rng);

}  // namespace attnmil
