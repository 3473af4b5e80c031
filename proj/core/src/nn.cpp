#include "attnmil/nn.hpp"

#include <cmath>
#include <string>

#include "attnmil/error.hpp"

namespace attnmil::nn {

std::string_view to_string(Activation activation) {
  switch (activation) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::identity: return "identity";
  }
  return "identity";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "identity") return Activation::identity;
  fail("unknown activation '" + std::string(name) + "'");
}

void DenseLayer::validate() const {
  require(weights.rows() > 0 && weights.cols() > 0, "dense layer: empty weight matrix");
  require(biases.size() == weights.rows(), "dense layer: bias length does not match output width");
  require(dropout_rate >= 0.0 && dropout_rate < 1.0, "dense layer: dropout rate must lie in [0, 1)");
  require(weights.allFinite() && biases.allFinite(), "dense layer: non-finite parameters");
}

void LayerStack::validate() const {
  require(!layers.empty(), "layer stack: no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].validate();
    if (i > 0)
      require(layers[i].in_dim() == layers[i - 1].out_dim(),
              "layer stack: layer " + std::to_string(i) + " input width does not match layer " +
                  std::to_string(i - 1) + " output width");
  }
}

DenseLayer init_layer(std::size_t in_dim, std::size_t out_dim, Activation activation,
                      double dropout_rate, Rng& rng) {
  require(in_dim > 0 && out_dim > 0, "init_layer: dimensions must be positive");
  require(dropout_rate >= 0.0 && dropout_rate < 1.0, "init_layer: dropout rate must lie in [0, 1)");
  const double limit = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
  DenseLayer layer;
  layer.weights.resize(static_cast<Eigen::Index>(out_dim), static_cast<Eigen::Index>(in_dim));
  for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
    for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = rng.uniform(-limit, limit);
  layer.biases = Vector::Zero(static_cast<Eigen::Index>(out_dim));
  layer.activation = activation;
  layer.dropout_rate = dropout_rate;
  return layer;
}

LayerStack init_stack(std::span<const std::size_t> dims, std::span<const Activation> activations,
                      std::span<const double> dropout_rates, Rng& rng) {
  require(dims.size() >= 2, "init_stack: need at least one layer");
  const std::size_t n = dims.size() - 1;
  require(activations.size() == n && dropout_rates.size() == n,
          "init_stack: one activation and one dropout rate per layer");
  LayerStack stack;
  for (std::size_t i = 0; i < n; ++i)
    stack.layers.push_back(init_layer(dims[i], dims[i + 1], activations[i], dropout_rates[i], rng));
  return stack;
}

LayerGradient LayerGradient::zeros_like(const DenseLayer& layer) {
  return {Matrix::Zero(layer.weights.rows(), layer.weights.cols()), Vector::Zero(layer.biases.size())};
}

StackGradient StackGradient::zeros_like(const LayerStack& stack) {
  StackGradient g;
  for (const auto& layer : stack.layers) g.layers.push_back(LayerGradient::zeros_like(layer));
  return g;
}

void StackGradient::set_zero() {
  for (auto& layer : layers) {
    layer.weights.setZero();
    layer.biases.setZero();
  }
}

namespace {

void activate(Matrix& m, Activation activation) {
  switch (activation) {
    case Activation::relu: m = m.cwiseMax(0.0); break;
    case Activation::tanh: m = m.array().tanh().matrix(); break;
    case Activation::sigmoid: m = (1.0 / (1.0 + (-m.array()).exp())).matrix(); break;
    case Activation::identity: break;
  }
}

// Derivative expressed through the activated value.
Matrix activation_slope(const Matrix& activated, Activation activation) {
  switch (activation) {
    case Activation::relu: return (activated.array() > 0.0).cast<double>().matrix();
    case Activation::tanh: return (1.0 - activated.array().square()).matrix();
    case Activation::sigmoid: return (activated.array() * (1.0 - activated.array())).matrix();
    case Activation::identity: break;
  }
  return Matrix::Ones(activated.rows(), activated.cols());
}

}  // namespace

Matrix forward_layer(const DenseLayer& layer, const Matrix& input, Mode mode, Rng& rng,
                     LayerTrace* trace) {
  require(static_cast<std::size_t>(input.cols()) == layer.in_dim(),
          "forward: input width " + std::to_string(input.cols()) + " does not match layer input " +
              std::to_string(layer.in_dim()));
  Matrix out = input * layer.weights.transpose();
  out.rowwise() += layer.biases.transpose();
  activate(out, layer.activation);
  if (trace) {
    trace->input = input;
    trace->activated = out;
    trace->mask.resize(0, 0);
  }
  if (mode == Mode::train && layer.dropout_rate > 0.0) {
    const double keep_scale = 1.0 / (1.0 - layer.dropout_rate);
    Matrix mask(out.rows(), out.cols());
    for (Eigen::Index r = 0; r < mask.rows(); ++r)
      for (Eigen::Index c = 0; c < mask.cols(); ++c)
        mask(r, c) = rng.bernoulli(layer.dropout_rate) ? 0.0 : keep_scale;
    out.array() *= mask.array();
    if (trace) trace->mask = std::move(mask);
  }
  return out;
}

ForwardPass forward(const LayerStack& stack, const Matrix& input, Mode mode, Rng& rng) {
  require(!stack.layers.empty(), "forward: empty layer stack");
  ForwardPass pass;
  pass.tape.layers.resize(stack.layers.size());
  Matrix current = input;
  for (std::size_t i = 0; i < stack.layers.size(); ++i)
    current = forward_layer(stack.layers[i], current, mode, rng, &pass.tape.layers[i]);
  pass.output = std::move(current);
  return pass;
}

Matrix infer(const LayerStack& stack, const Matrix& input) {
  require(!stack.layers.empty(), "infer: empty layer stack");
  Rng unused(0);
  Matrix current = input;
  for (const auto& layer : stack.layers) current = forward_layer(layer, current, Mode::infer, unused, nullptr);
  return current;
}

Matrix backward_layer(const DenseLayer& layer, const LayerTrace& trace, const Matrix& output_grad,
                      LayerGradient& accum) {
  require(trace.activated.rows() == output_grad.rows() && trace.activated.cols() == output_grad.cols() &&
              static_cast<std::size_t>(trace.input.cols()) == layer.in_dim() &&
              static_cast<std::size_t>(trace.activated.cols()) == layer.out_dim(),
          "backward: tape does not match layer or upstream gradient shape");
  require(accum.weights.rows() == layer.weights.rows() && accum.weights.cols() == layer.weights.cols() &&
              accum.biases.size() == layer.biases.size(),
          "backward: gradient buffer shape does not match layer");
  Matrix delta = output_grad;
  if (trace.mask.size() > 0) delta.array() *= trace.mask.array();
  if (layer.activation != Activation::identity)
    delta.array() *= activation_slope(trace.activated, layer.activation).array();
  accum.weights.noalias() += delta.transpose() * trace.input;
  accum.biases.noalias() += delta.colwise().sum().transpose();
  return delta * layer.weights;
}

Matrix backward(const LayerStack& stack, const GradientTape& tape, const Matrix& output_grad,
                StackGradient& accum) {
  require(tape.layers.size() == stack.layers.size() && accum.layers.size() == stack.layers.size(),
          "backward: tape or gradient buffer does not match the layer stack");
  Matrix grad = output_grad;
  for (std::size_t i = stack.layers.size(); i-- > 0;)
    grad = backward_layer(stack.layers[i], tape.layers[i], grad, accum.layers[i]);
  return grad;
}

void sgd_step(Eigen::Ref<Matrix> params, const Eigen::Ref<const Matrix>& gradient, double learning_rate) {
  require(learning_rate > 0.0, "sgd_step: learning rate must be positive");
  require(params.rows() == gradient.rows() && params.cols() == gradient.cols(),
          "sgd_step: gradient shape does not match parameters");
  params.noalias() -= learning_rate * gradient;
}

void sgd_step(DenseLayer& layer, const LayerGradient& gradient, double learning_rate) {
  sgd_step(layer.weights, gradient.weights, learning_rate);
  sgd_step(layer.biases, gradient.biases, learning_rate);
}

void sgd_step(LayerStack& stack, const StackGradient& gradient, double learning_rate) {
  require(gradient.layers.size() == stack.layers.size(), "sgd_step: gradient has wrong layer count");
  for (std::size_t i = 0; i < stack.layers.size(); ++i) sgd_step(stack.layers[i], gradient.layers[i], learning_rate);
}

void collect_parameters(DenseLayer& layer, std::vector<double*>& out) {
  for (Eigen::Index i = 0; i < layer.weights.size(); ++i) out.push_back(layer.weights.data() + i);
  for (Eigen::Index i = 0; i < layer.biases.size(); ++i) out.push_back(layer.biases.data() + i);
}

void collect_parameters(LayerStack& stack, std::vector<double*>& out) {
  for (auto& layer : stack.layers) collect_parameters(layer, out);
}

void flatten(const LayerGradient& gradient, std::vector<double>& out) {
  out.insert(out.end(), gradient.weights.data(), gradient.weights.data() + gradient.weights.size());
  out.insert(out.end(), gradient.biases.data(), gradient.biases.data() + gradient.biases.size());
}

void flatten(const StackGradient& gradient, std::vector<double>& out) {
  for (const auto& layer : gradient.layers) flatten(layer, out);
}

}  // namespace attnmil::nn
