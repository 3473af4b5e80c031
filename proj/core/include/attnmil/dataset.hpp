#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "attnmil/rng.hpp"

namespace attnmil {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr std::size_t kDefaultFeatureDim = 103;
inline constexpr std::size_t kDefaultPadTarget = 12;

/// One subject: a labelled set of instances, one per row of `instances`.
struct Bag {
  std::string id;
  int label = 0;
  Matrix instances;
  // Empty for ordinary bags; one flag per row after pad_bag_duplicate.
  std::vector<bool> padding;

  std::size_t size() const { return static_cast<std::size_t>(instances.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(instances.cols()); }
  bool is_padding(std::size_t slot) const { return !padding.empty() && padding[slot]; }
  std::size_t original_size() const;

  bool operator==(const Bag& other) const;
};

struct MilDataset {
  std::vector<Bag> bags;
  std::size_t feature_dim = 0;
  std::vector<std::string> feature_names;
  // Planted witness rows per positive bag id. Only synthetic data carries these;
  // models never see them.
  std::map<std::string, std::vector<std::size_t>> witnesses;

  std::size_t count_label(int label) const;
  const Bag* find(const std::string& id) const;
  // Throws on duplicate ids, empty bags, ragged dimensions or non-finite values.
  void validate() const;
};

MilDataset load_dataset(const std::filesystem::path& path,
                        std::optional<std::size_t> feature_dim = std::nullopt);
std::string format_dataset(const MilDataset& dataset);
void save_dataset(const std::filesystem::path& path, const MilDataset& dataset);

std::filesystem::path witness_sidecar_path(const std::filesystem::path& dataset_path);
std::string format_witnesses(const MilDataset& dataset);
std::map<std::string, std::vector<std::size_t>> load_witnesses(const std::filesystem::path& path);

/// Per-feature z-score parameters pooled over every instance of the fit set.
struct Standardizer {
  static constexpr double kVarianceFloor = 1e-8;

  Vector means;
  Vector stds;

  static Standardizer identity(std::size_t dim);
  std::size_t dim() const { return static_cast<std::size_t>(means.size()); }
};

Standardizer fit_standardizer(std::span<const Bag> train_bags);
Bag apply_standardizer(const Standardizer& standardizer, const Bag& bag);
std::vector<Bag> apply_standardizer(const Standardizer& standardizer, std::span<const Bag> bags);

// Slot i of the result holds instance (i mod bag.size()).
Bag pad_bag_duplicate(const Bag& bag, std::size_t target_size);
Bag strip_padding(const Bag& bag);

struct SyntheticSpec {
  std::size_t n_pos = 82;
  std::size_t n_neg = 28;
  std::size_t feature_dim = kDefaultFeatureDim;
  std::size_t min_bag_size = 1;
  std::size_t max_bag_size = kDefaultPadTarget;
  double witness_shift = 2.0;
  std::size_t n_signal_dims = 20;
  std::size_t n_witnesses = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Negatives are standard normal. Each positive bag gets `n_witnesses` rows
/// (capped by its size) whose first `n_signal_dims` coordinates are shifted by
/// `witness_shift`.
MilDataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace attnmil
