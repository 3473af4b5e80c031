#include "attnmil/mi_net.hpp"

#include "attnmil/attention_mil.hpp"
#include "attnmil/error.hpp"

namespace attnmil {

void MiNetModel::validate() const {
  transform.validate();
  head.validate();
  require(head.in_dim() == transform.out_dim() && head.out_dim() == 1, "mi-net: head must map embedding to one unit");
}

MiNetModel init_mi_net(std::size_t feature_dim, const Architecture& architecture, Pooling pooling, Rng& rng) {
  // Same transformation network and head as the attention model, minus attention.
  auto base = init_attention_mil(feature_dim, architecture, rng);
  MiNetModel model;
  model.transform = std::move(base.transform);
  model.head = std::move(base.head);
  model.pooling = pooling;
  return model;
}

MiNetForward minet_forward(const MiNetModel& model, const Bag& bag, nn::Mode mode, Rng& rng) {
  require(bag.size() >= 1, "mi-net: bag '" + bag.id + "' is empty");
  require(bag.dim() == model.feature_dim(), "mi-net: bag '" + bag.id + "' has " + std::to_string(bag.dim()) +
                                                " features, model expects " + std::to_string(model.feature_dim()));
  MiNetForward pass;
  auto transformed = nn::forward(model.transform, bag.instances, mode, rng);
  pass.embeddings = std::move(transformed.output);
  pass.transform_tape = std::move(transformed.tape);

  const auto& H = pass.embeddings;
  Matrix pooled(1, H.cols());
  if (model.pooling == Pooling::max) {
    pass.argmax.resize(static_cast<std::size_t>(H.cols()));
    for (Eigen::Index j = 0; j < H.cols(); ++j) {
      Eigen::Index best = 0;
      for (Eigen::Index k = 1; k < H.rows(); ++k)
        if (H(k, j) > H(best, j)) best = k;
      pass.argmax[static_cast<std::size_t>(j)] = best;
      pooled(0, j) = H(best, j);
    }
  } else {
    pooled = H.colwise().mean();
  }
  Matrix out = nn::forward_layer(model.head, pooled, mode, rng, &pass.head_trace);
  pass.probability = out(0, 0);
  return pass;
}

MiNetGradient MiNetGradient::zeros_like(const MiNetModel& model) {
  return {nn::StackGradient::zeros_like(model.transform), nn::LayerGradient::zeros_like(model.head)};
}

void MiNetGradient::set_zero() {
  transform.set_zero();
  head.weights.setZero();
  head.biases.setZero();
}

void minet_backward(const MiNetModel& model, const MiNetForward& pass, double loss_grad, MiNetGradient& accum) {
  Matrix upstream(1, 1);
  upstream(0, 0) = loss_grad;
  const Matrix d_pooled = nn::backward_layer(model.head, pass.head_trace, upstream, accum.head);
  const auto& H = pass.embeddings;
  Matrix d_instances;
  if (model.pooling == Pooling::max) {
    d_instances = Matrix::Zero(H.rows(), H.cols());
    for (Eigen::Index j = 0; j < H.cols(); ++j) d_instances(pass.argmax[static_cast<std::size_t>(j)], j) = d_pooled(0, j);
  } else {
    d_instances = (d_pooled / static_cast<double>(H.rows())).replicate(H.rows(), 1);
  }
  nn::backward(model.transform, pass.transform_tape, d_instances, accum.transform);
}

void sgd_step(MiNetModel& model, const MiNetGradient& gradient, double learning_rate) {
  nn::sgd_step(model.transform, gradient.transform, learning_rate);
  nn::sgd_step(model.head, gradient.head, learning_rate);
}

void collect_parameters(MiNetModel& model, std::vector<double*>& out) {
  nn::collect_parameters(model.transform, out);
  nn::collect_parameters(model.head, out);
}

void flatten(const MiNetGradient& gradient, std::vector<double>& out) {
  nn::flatten(gradient.transform, out);
  nn::flatten(gradient.head, out);
}

double minet_probability(const MiNetModel& model, const Bag& bag) {
  Rng unused(0);
  return minet_forward(model, prepare_bag(model.pad_target, bag), nn::Mode::infer, unused).probability;
}

MiNetTraining train_mi_net(std::span<const Bag> train_bags, const TrainConfig& config, Rng& rng) {
  config.validate();
  require(!train_bags.empty(), "train_mi_net: no training bags");
  require_both_classes(train_bags, "train_mi_net");

  MiNetTraining result;
  auto& model = result.model;
  model = init_mi_net(train_bags.front().dim(), config.architecture, config.pooling, rng);
  model.pad_target = config.pad_duplicate ? config.pad_target : 0;

  std::vector<Bag> bags;
  bags.reserve(train_bags.size());
  for (const auto& bag : train_bags) bags.push_back(prepare_bag(model.pad_target, bag));

  auto gradient = MiNetGradient::zeros_like(model);
  result.log = run_sgd_epochs(bags, config.epochs, rng, [&](const Bag& bag) {
    gradient.set_zero();
    auto pass = minet_forward(model, bag, nn::Mode::train, rng);
    auto loss = bce_loss(pass.probability, bag.label);
    minet_backward(model, pass, loss.gradient, gradient);
    sgd_step(model, gradient, config.learning_rate);
    return loss.loss;
  });
  return result;
}

}  // namespace attnmil
