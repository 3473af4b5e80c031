#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "attnmil/dataset.hpp"
#include "attnmil/rng.hpp"

namespace attnmil {

struct FoldPlan {
  std::size_t repetition = 0;
  std::size_t fold = 0;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

/// Stratified k-fold split for one repetition. Each class is shuffled with
/// `seed`, then dealt round-robin; negatives continue where positives stopped
/// so fold sizes as well as per-class counts differ by at most one. Every class
/// needs at least k bags unless k is the bag count (leave-one-out).
std::vector<FoldPlan> stratified_kfold(const MilDataset& dataset, std::size_t k, std::size_t repetition,
                                       std::uint64_t seed);

/// All repetitions, each shuffled with Rng::derive(master_seed, {repetition}).
std::vector<FoldPlan> make_fold_plans(const MilDataset& dataset, std::size_t k, std::size_t repetitions,
                                      std::uint64_t master_seed);

std::uint64_t fold_plan_hash(std::span<const FoldPlan> plans);

enum class SizePolicy { empirical, uniform };

std::string_view to_string(SizePolicy policy);
SizePolicy parse_size_policy(std::string_view name);

inline constexpr std::string_view kSyntheticPrefix = "synthetic:";

/// Appends `count` simulated negative bags built from the pooled instances of
/// every negative bag in `train_bags`. Each size is drawn from the observed
/// negative bag sizes (empirical) or uniformly on [1, largest]; rows are drawn
/// uniformly with replacement from the pool.
std::vector<Bag> oversample_negative_bags(std::span<const Bag> train_bags, std::size_t count, SizePolicy policy,
                                          Rng& rng);

}  // namespace attnmil
