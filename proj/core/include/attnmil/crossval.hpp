#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "attnmil/classifier.hpp"
#include "attnmil/metrics.hpp"
#include "attnmil/resampling.hpp"
#include "attnmil/wilcoxon.hpp"

namespace attnmil {

struct BagOutcome {
  std::string bag_id;
  int label = 0;
  double score = 0.0;
  int predicted = 0;
  // Attention over the bag's original instances (padding collapsed); attention model only.
  std::vector<double> attention;
};

struct FoldOutcome {
  std::size_t repetition = 0;
  std::size_t fold = 0;
  std::size_t n_train = 0;  // after oversampling
  MetricRecord metrics;
  std::vector<BagOutcome> bags;
  RocCurve roc;
};

struct CrossvalOptions {
  Method method = Method::attention_mil;
  TrainConfig config;
  std::size_t folds = 5;
  std::size_t repetitions = 20;
  std::uint64_t master_seed = 0;
  SizePolicy size_policy = SizePolicy::empirical;
  std::size_t threads = 1;
};

struct EvalReport {
  Method method = Method::attention_mil;
  std::uint64_t master_seed = 0;
  std::size_t repetitions = 0;
  std::size_t folds = 0;
  std::uint64_t plan_hash = 0;
  std::vector<FoldOutcome> outcomes;  // repetition-major, fold-minor
};

/// Runs every (repetition, fold) cell: standardize on the training fold, add
/// simulated negatives to the training fold, train, score the test fold.
/// Each cell draws from streams derived from (master_seed, repetition, fold),
/// so the report does not depend on `threads`.
EvalReport run_crossval(const MilDataset& dataset, const CrossvalOptions& options);

enum class AggregationLevel { repetition, fold };

/// Repetition level: one value per repetition, the mean of its defined fold
/// values. Fold level: every fold value.
std::vector<std::optional<double>> metric_series(const EvalReport& report, Metric metric, AggregationLevel level);
MeanSem summarize(const EvalReport& report, Metric metric, AggregationLevel level);

struct MetricComparison {
  Metric metric;
  MeanSem a;
  MeanSem b;
  WilcoxonResult test;
  std::size_t pairs = 0;
  int direction = 0;  // +1 when a's mean is larger, -1 when b's is, 0 on a tie
};

bool same_pairing(const EvalReport& a, const EvalReport& b);

/// Paired Wilcoxon per metric over repetition-level values. Throws unless
/// both reports share master seed, repetition and fold counts and fold plans.
std::vector<MetricComparison> compare_reports(const EvalReport& a, const EvalReport& b);

}  // namespace attnmil
