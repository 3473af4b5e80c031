#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <variant>

#include "attnmil/attention_mil.hpp"
#include "attnmil/mi_net.hpp"
#include "attnmil/mi_svm.hpp"

namespace attnmil {

enum class Method { attention_mil, mi_net, mi_svm };

std::string_view to_string(Method method);
Method parse_method(std::string_view name);

using Model = std::variant<AttentionMilModel, MiNetModel, MiSvmModel>;

Method method_of(const Model& model);
std::size_t feature_dim(const Model& model);

struct BagScore {
  double score;  // probability for the networks, raw margin for MI-SVM
  int label;
  std::optional<AttentionReport> attention;
};

struct TrainedModel {
  Model model;
  TrainingLog log;  // empty for MI-SVM
};

TrainedModel train_model(Method method, std::span<const Bag> train_bags, const TrainConfig& config, Rng& rng);
BagScore score_bag(const Model& model, const Bag& bag);

}  // namespace attnmil
