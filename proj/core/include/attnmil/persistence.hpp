#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "attnmil/classifier.hpp"
#include "attnmil/dataset.hpp"

namespace attnmil {

inline constexpr int kModelFormatVersion = 1;

/// A trained model plus the standardizer fitted on its training data.
///
/// Text layout: one header line
///   attnmil-model 1 kind=<method> feature_dim=<D> transform=<in>x<out>:<act>:<dropout>,...
///   attention=<L>x<M> head=<in>x1:sigmoid:<dropout> pooling=<max|mean> pad_target=<n>
///   lambda=<l> standardizer=<0|1>
/// (keys irrelevant to the kind are omitted), then one line per tensor:
///   <name> <rows> <cols> <values in row-major order, 17 significant digits>
struct ModelFile {
  Model model;
  std::optional<Standardizer> standardizer;
};

std::string format_model(const ModelFile& file);
ModelFile parse_model(std::string_view text);
void save_model(const std::filesystem::path& path, const ModelFile& file);
ModelFile load_model(const std::filesystem::path& path);

}  // namespace attnmil
