#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "attnmil/rng.hpp"

namespace attnmil::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { relu, tanh, sigmoid, identity };
enum class Mode { train, infer };

std::string_view to_string(Activation activation);
Activation parse_activation(std::string_view name);

struct DenseLayer {
  Matrix weights;  // out_dim x in_dim
  Vector biases;
  Activation activation = Activation::identity;
  double dropout_rate = 0.0;

  std::size_t in_dim() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t out_dim() const { return static_cast<std::size_t>(weights.rows()); }
  void validate() const;
};

struct LayerStack {
  std::vector<DenseLayer> layers;

  std::size_t in_dim() const { return layers.front().in_dim(); }
  std::size_t out_dim() const { return layers.back().out_dim(); }
  void validate() const;
};

// Glorot-uniform weights, zero biases.
DenseLayer init_layer(std::size_t in_dim, std::size_t out_dim, Activation activation,
                      double dropout_rate, Rng& rng);
// `dims` holds layers.size() + 1 sizes, input first.
LayerStack init_stack(std::span<const std::size_t> dims, std::span<const Activation> activations,
                      std::span<const double> dropout_rates, Rng& rng);

/// Everything one layer needs to replay its forward pass backwards.
struct LayerTrace {
  Matrix input;      // rows are samples
  Matrix activated;  // after the activation, before dropout
  Matrix mask;       // inverted-dropout multipliers; empty when no dropout ran
};

struct GradientTape {
  std::vector<LayerTrace> layers;
};

struct LayerGradient {
  Matrix weights;
  Vector biases;

  static LayerGradient zeros_like(const DenseLayer& layer);
};

struct StackGradient {
  std::vector<LayerGradient> layers;

  static StackGradient zeros_like(const LayerStack& stack);
  void set_zero();
};

struct ForwardPass {
  Matrix output;
  GradientTape tape;
};

// Inputs are batched by row; each row goes through the layers independently.
// Dropout masks are drawn in row-major order, layer by layer.
Matrix forward_layer(const DenseLayer& layer, const Matrix& input, Mode mode, Rng& rng,
                     LayerTrace* trace);
ForwardPass forward(const LayerStack& stack, const Matrix& input, Mode mode, Rng& rng);
Matrix infer(const LayerStack& stack, const Matrix& input);

/// Accumulates parameter gradients into `accum` and returns d loss / d input.
Matrix backward_layer(const DenseLayer& layer, const LayerTrace& trace, const Matrix& output_grad,
                      LayerGradient& accum);
Matrix backward(const LayerStack& stack, const GradientTape& tape, const Matrix& output_grad,
                StackGradient& accum);

// Plain SGD: p <- p - learning_rate * g.
void sgd_step(DenseLayer& layer, const LayerGradient& gradient, double learning_rate);
void sgd_step(LayerStack& stack, const StackGradient& gradient, double learning_rate);
void sgd_step(Eigen::Ref<Matrix> params, const Eigen::Ref<const Matrix>& gradient, double learning_rate);

/// Flat views used by the gradient checker and by persistence. The order is
/// layer by layer, weights (column-major) then biases.
void collect_parameters(DenseLayer& layer, std::vector<double*>& out);
void collect_parameters(LayerStack& stack, std::vector<double*>& out);
void flatten(const LayerGradient& gradient, std::vector<double>& out);
void flatten(const StackGradient& gradient, std::vector<double>& out);

}  // namespace attnmil::nn
