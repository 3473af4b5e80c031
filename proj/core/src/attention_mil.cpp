#include "attnmil/attention_mil.hpp"

#include <cmath>

#include "attnmil/error.hpp"

namespace attnmil {

AttentionPool attention_pool(const Matrix& embeddings, const AttentionParams& attention) {
  require(embeddings.rows() >= 1, "attention_pool: bag has no instances");
  require(attention.hidden.cols() == embeddings.cols() && attention.projection.size() == attention.hidden.rows(),
          "attention_pool: attention parameters do not match embedding width");
  AttentionPool pool;
  pool.activations = (embeddings * attention.hidden.transpose()).array().tanh().matrix();
  pool.scores = pool.activations * attention.projection;
  const double top = pool.scores.maxCoeff();
  pool.weights = (pool.scores.array() - top).exp().matrix();
  pool.weights /= pool.weights.sum();
  pool.embedding = embeddings.transpose() * pool.weights;
  return pool;
}

std::vector<double> AttentionReport::collapse_padding() const {
  if (padding.empty()) return weights;
  std::size_t original = 0;
  for (bool p : padding) original += p ? 0 : 1;
  std::vector<double> out(original, 0.0);
  for (std::size_t i = 0; i < weights.size(); ++i) out[i % original] += weights[i];
  return out;
}

void AttentionMilModel::validate() const {
  transform.validate();
  head.validate();
  require(attention.hidden.cols() == static_cast<Eigen::Index>(embedding_dim()) &&
              attention.projection.size() == attention.hidden.rows() && attention.hidden.rows() > 0,
          "attention model: attention parameters do not match the embedding width");
  require(attention.hidden.allFinite() && attention.projection.allFinite(),
          "attention model: non-finite attention parameters");
  require(head.in_dim() == embedding_dim() && head.out_dim() == 1, "attention model: head must map embedding to one unit");
}

AttentionMilModel init_attention_mil(std::size_t feature_dim, const Architecture& architecture, Rng& rng) {
  std::vector<std::size_t> dims{feature_dim};
  std::vector<nn::Activation> activations;
  std::vector<double> dropouts;
  for (auto width : architecture.hidden_dims) {
    dims.push_back(width);
    activations.push_back(nn::Activation::relu);
    dropouts.push_back(architecture.dropout);
  }
  dims.push_back(architecture.embedding_dim);
  activations.push_back(nn::Activation::identity);
  dropouts.push_back(0.0);

  AttentionMilModel model;
  model.transform = nn::init_stack(dims, activations, dropouts, rng);
  const auto M = architecture.embedding_dim, L = architecture.attention_dim;
  model.attention.hidden = nn::init_layer(M, L, nn::Activation::tanh, 0.0, rng).weights;
  model.attention.projection = nn::init_layer(L, 1, nn::Activation::identity, 0.0, rng).weights.row(0).transpose();
  model.head = nn::init_layer(M, 1, nn::Activation::sigmoid, 0.0, rng);
  return model;
}

Bag prepare_bag(std::size_t pad_target, const Bag& bag) {
  if (pad_target == 0 || !bag.padding.empty()) return bag;
  return pad_bag_duplicate(bag, pad_target);
}

AttentionMilForward attn_mil_forward(const AttentionMilModel& model, const Bag& bag, nn::Mode mode, Rng& rng) {
  require(bag.size() >= 1, "attention model: bag '" + bag.id + "' is empty");
  require(bag.dim() == model.feature_dim(), "attention model: bag '" + bag.id + "' has " +
                                                std::to_string(bag.dim()) + " features, model expects " +
                                                std::to_string(model.feature_dim()));
  AttentionMilForward pass;
  auto transformed = nn::forward(model.transform, bag.instances, mode, rng);
  pass.embeddings = std::move(transformed.output);
  pass.transform_tape = std::move(transformed.tape);
  pass.pool = attention_pool(pass.embeddings, model.attention);
  Matrix out = nn::forward_layer(model.head, pass.pool.embedding.transpose(), mode, rng, &pass.head_trace);
  pass.probability = out(0, 0);
  pass.report.bag_id = bag.id;
  pass.report.weights.assign(pass.pool.weights.data(), pass.pool.weights.data() + pass.pool.weights.size());
  pass.report.padding = bag.padding;
  return pass;
}

AttentionMilGradient AttentionMilGradient::zeros_like(const AttentionMilModel& model) {
  return {nn::StackGradient::zeros_like(model.transform),
          Matrix::Zero(model.attention.hidden.rows(), model.attention.hidden.cols()),
          Vector::Zero(model.attention.projection.size()), nn::LayerGradient::zeros_like(model.head)};
}

void AttentionMilGradient::set_zero() {
  transform.set_zero();
  hidden.setZero();
  projection.setZero();
  head.weights.setZero();
  head.biases.setZero();
}

void attn_mil_backward(const AttentionMilModel& model, const AttentionMilForward& pass, double loss_grad,
                       AttentionMilGradient& accum) {
  const auto& pool = pass.pool;
  const auto& H = pass.embeddings;
  Matrix upstream(1, 1);
  upstream(0, 0) = loss_grad;
  const Vector d_embedding = nn::backward_layer(model.head, pass.head_trace, upstream, accum.head).transpose();

  // Bag embedding is sum_k alpha_k h_k.
  Matrix d_instances = pool.weights * d_embedding.transpose();
  const Vector d_alpha = H * d_embedding;
  const Vector d_scores = pool.weights.cwiseProduct((d_alpha.array() - pool.weights.dot(d_alpha)).matrix());

  accum.projection.noalias() += pool.activations.transpose() * d_scores;
  const Matrix d_pre = ((d_scores * model.attention.projection.transpose()).array() *
                        (1.0 - pool.activations.array().square()))
                           .matrix();
  accum.hidden.noalias() += d_pre.transpose() * H;
  d_instances.noalias() += d_pre * model.attention.hidden;

  nn::backward(model.transform, pass.transform_tape, d_instances, accum.transform);
}

void sgd_step(AttentionMilModel& model, const AttentionMilGradient& gradient, double learning_rate) {
  nn::sgd_step(model.transform, gradient.transform, learning_rate);
  nn::sgd_step(model.attention.hidden, gradient.hidden, learning_rate);
  nn::sgd_step(model.attention.projection, gradient.projection, learning_rate);
  nn::sgd_step(model.head, gradient.head, learning_rate);
}

void collect_parameters(AttentionMilModel& model, std::vector<double*>& out) {
  nn::collect_parameters(model.transform, out);
  for (Eigen::Index i = 0; i < model.attention.hidden.size(); ++i) out.push_back(model.attention.hidden.data() + i);
  for (Eigen::Index i = 0; i < model.attention.projection.size(); ++i)
    out.push_back(model.attention.projection.data() + i);
  nn::collect_parameters(model.head, out);
}

void flatten(const AttentionMilGradient& gradient, std::vector<double>& out) {
  nn::flatten(gradient.transform, out);
  out.insert(out.end(), gradient.hidden.data(), gradient.hidden.data() + gradient.hidden.size());
  out.insert(out.end(), gradient.projection.data(), gradient.projection.data() + gradient.projection.size());
  nn::flatten(gradient.head, out);
}

AttentionPrediction predict_bag(const AttentionMilModel& model, const Bag& bag) {
  Rng unused(0);
  auto pass = attn_mil_forward(model, prepare_bag(model.pad_target, bag), nn::Mode::infer, unused);
  return {pass.probability, threshold_label(pass.probability), std::move(pass.report)};
}

AttentionMilTraining train_attention_mil(std::span<const Bag> train_bags, const TrainConfig& config, Rng& rng) {
  config.validate();
  require(!train_bags.empty(), "train_attention_mil: no training bags");
  require_both_classes(train_bags, "train_attention_mil");

  AttentionMilTraining result;
  auto& model = result.model;
  model = init_attention_mil(train_bags.front().dim(), config.architecture, rng);
  model.pad_target = config.pad_duplicate ? config.pad_target : 0;

  std::vector<Bag> bags;
  bags.reserve(train_bags.size());
  for (const auto& bag : train_bags) bags.push_back(prepare_bag(model.pad_target, bag));

  auto gradient = AttentionMilGradient::zeros_like(model);
  result.log = run_sgd_epochs(bags, config.epochs, rng, [&](const Bag& bag) {
    gradient.set_zero();
    auto pass = attn_mil_forward(model, bag, nn::Mode::train, rng);
    auto loss = bce_loss(pass.probability, bag.label);
    attn_mil_backward(model, pass, loss.gradient, gradient);
    sgd_step(model, gradient, config.learning_rate);
    return loss.loss;
  });
  return result;
}

}  // namespace attnmil
