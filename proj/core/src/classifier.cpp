#include "attnmil/classifier.hpp"

#include <string>

#include "attnmil/error.hpp"

namespace attnmil {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::attention_mil: return "attention_mil";
    case Method::mi_net: return "mi_net";
    case Method::mi_svm: return "mi_svm";
  }
  return "attention_mil";
}

Method parse_method(std::string_view name) {
  if (name == "attention_mil") return Method::attention_mil;
  if (name == "mi_net") return Method::mi_net;
  if (name == "mi_svm") return Method::mi_svm;
  fail("unknown method '" + std::string(name) + "' (expected attention_mil, mi_net or mi_svm)");
}

Method method_of(const Model& model) { return static_cast<Method>(model.index()); }

std::size_t feature_dim(const Model& model) {
  return std::visit([](const auto& m) { return m.feature_dim(); }, model);
}

TrainedModel train_model(Method method, std::span<const Bag> train_bags, const TrainConfig& config, Rng& rng) {
  switch (method) {
    case Method::attention_mil: {
      auto trained = train_attention_mil(train_bags, config, rng);
      return {std::move(trained.model), std::move(trained.log)};
    }
    case Method::mi_net: {
      auto trained = train_mi_net(train_bags, config, rng);
      return {std::move(trained.model), std::move(trained.log)};
    }
    case Method::mi_svm:
      config.validate();
      return {train_misvm(train_bags, config.svm, rng), {}};
  }
  fail("train_model: unknown method");
}

BagScore score_bag(const Model& model, const Bag& bag) {
  if (const auto* attention = std::get_if<AttentionMilModel>(&model)) {
    auto prediction = predict_bag(*attention, bag);
    return {prediction.probability, prediction.label, std::move(prediction.report)};
  }
  if (const auto* minet = std::get_if<MiNetModel>(&model)) {
    double p = minet_probability(*minet, bag);
    return {p, threshold_label(p), std::nullopt};
  }
  auto svm = misvm_score(std::get<MiSvmModel>(model), bag);
  return {svm.score, svm.label, std::nullopt};
}

}  // namespace attnmil
