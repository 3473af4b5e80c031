#include "attnmil/resampling.hpp"

#include <algorithm>

#include "attnmil/error.hpp"
#include "attnmil/io.hpp"

namespace attnmil {

std::vector<FoldPlan> stratified_kfold(const MilDataset& dataset, std::size_t k, std::size_t repetition,
                                       std::uint64_t seed) {
  require(k >= 2, "stratified_kfold: need at least two folds");
  std::vector<std::size_t> positives, negatives;
  for (std::size_t i = 0; i < dataset.bags.size(); ++i)
    (dataset.bags[i].label == 1 ? positives : negatives).push_back(i);
  // k equal to the bag count is leave-one-out, where no class can fill every fold.
  const bool leave_one_out = k == dataset.bags.size();
  if (positives.size() < k && !leave_one_out)
    fail("stratified_kfold: " + std::to_string(positives.size()) + " positive bags cannot fill " + std::to_string(k) + " folds");
  if (negatives.size() < k && !leave_one_out)
    fail("stratified_kfold: " + std::to_string(negatives.size()) + " negative bags cannot fill " + std::to_string(k) + " folds");

  Rng rng(seed);
  rng.shuffle(std::span(positives));
  rng.shuffle(std::span(negatives));

  std::vector<std::size_t> fold_of(dataset.bags.size());
  std::size_t slot = 0;
  for (auto i : positives) fold_of[i] = slot++ % k;
  for (auto i : negatives) fold_of[i] = slot++ % k;

  std::vector<FoldPlan> plans(k);
  for (std::size_t f = 0; f < k; ++f) {
    plans[f].repetition = repetition;
    plans[f].fold = f;
  }
  for (std::size_t i = 0; i < dataset.bags.size(); ++i)
    for (std::size_t f = 0; f < k; ++f)
      (fold_of[i] == f ? plans[f].test_ids : plans[f].train_ids).push_back(dataset.bags[i].id);
  return plans;
}

std::vector<FoldPlan> make_fold_plans(const MilDataset& dataset, std::size_t k, std::size_t repetitions,
                                      std::uint64_t master_seed) {
  require(repetitions >= 1, "make_fold_plans: need at least one repetition");
  std::vector<FoldPlan> plans;
  for (std::size_t r = 0; r < repetitions; ++r) {
    auto rep = stratified_kfold(dataset, k, r, Rng::derive(master_seed, {1, r}));
    plans.insert(plans.end(), std::make_move_iterator(rep.begin()), std::make_move_iterator(rep.end()));
  }
  return plans;
}

std::uint64_t fold_plan_hash(std::span<const FoldPlan> plans) {
  std::uint64_t h = io::fnv1a("");
  for (const auto& plan : plans) {
    h = io::fnv1a(std::to_string(plan.repetition) + "/" + std::to_string(plan.fold) + ":", h);
    for (const auto& id : plan.test_ids) h = io::fnv1a(id + ",", h);
    h = io::fnv1a(";", h);
  }
  return h;
}

std::string_view to_string(SizePolicy policy) { return policy == SizePolicy::empirical ? "empirical" : "uniform"; }

SizePolicy parse_size_policy(std::string_view name) {
  if (name == "empirical") return SizePolicy::empirical;
  if (name == "uniform") return SizePolicy::uniform;
  fail("unknown size policy '" + std::string(name) + "' (expected empirical or uniform)");
}

std::vector<Bag> oversample_negative_bags(std::span<const Bag> train_bags, std::size_t count, SizePolicy policy,
                                          Rng& rng) {
  std::vector<Bag> out(train_bags.begin(), train_bags.end());
  if (count == 0) return out;

  std::vector<const Bag*> negatives;
  Eigen::Index pool_rows = 0;
  for (const auto& bag : train_bags)
    if (bag.label == 0) {
      negatives.push_back(&bag);
      pool_rows += bag.instances.rows();
    }
  require(!negatives.empty(), "oversample_negative_bags: no negative training bags to sample from");

  const auto dim = negatives.front()->instances.cols();
  Matrix pool(pool_rows, dim);
  std::vector<std::size_t> sizes;
  Eigen::Index row = 0;
  for (const auto* bag : negatives) {
    require(bag->instances.cols() == dim, "oversample_negative_bags: bags disagree on feature dimension");
    pool.middleRows(row, bag->instances.rows()) = bag->instances;
    row += bag->instances.rows();
    sizes.push_back(bag->size());
  }
  const std::size_t largest = *std::max_element(sizes.begin(), sizes.end());

  for (std::size_t s = 0; s < count; ++s) {
    Bag bag;
    bag.id = std::string(kSyntheticPrefix) + std::to_string(s);
    bag.label = 0;
    const std::size_t size = policy == SizePolicy::empirical ? sizes[rng.below(sizes.size())]
                                                             : static_cast<std::size_t>(rng.between(1, largest));
    bag.instances.resize(static_cast<Eigen::Index>(size), dim);
    for (Eigen::Index r = 0; r < bag.instances.rows(); ++r)
      bag.instances.row(r) = pool.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(pool_rows))));
    out.push_back(std::move(bag));
  }
  return out;
}

}  // namespace attnmil
