#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace attnmil {

/// Positive class is label 1. Metrics with a zero denominator stay nullopt.
struct MetricRecord {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::optional<double> recall, accuracy, ppv, npv, auc;
};

enum class Metric { recall, accuracy, ppv, npv, auc };
inline constexpr Metric kAllMetrics[] = {Metric::recall, Metric::accuracy, Metric::ppv, Metric::npv, Metric::auc};

std::string_view to_string(Metric metric);
std::optional<double> metric_value(const MetricRecord& record, Metric metric);

MetricRecord confusion_metrics(std::span<const int> predicted, std::span<const int> truth);
// Rebuilds the four ratios from the counts.
MetricRecord metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn);

struct RocPoint {
  double threshold;  // scores >= threshold are called positive
  double fpr;
  double tpr;
};

struct RocCurve {
  std::optional<double> auc;
  // Starts at (0,0), one point per distinct score in descending order, ends at (1,1).
  std::vector<RocPoint> points;
};

/// AUC by the Mann-Whitney pair rule: each (positive, negative) pair scores 1
/// when the positive ranks higher and 1/2 on a tie. nullopt for single-class input.
RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels);

struct CalibrationBin {
  double center;
  double mean_predicted;
  double observed_fraction;
  std::size_t count;
};

// Equal-width bins on [0, 1]; the last bin includes 1.0. Empty bins are dropped.
std::vector<CalibrationBin> calibration_curve(std::span<const double> probabilities, std::span<const int> labels,
                                              std::size_t n_bins);

struct MeanSem {
  std::optional<double> mean;
  std::optional<double> sem;  // sample std (n - 1) / sqrt(n); needs n >= 2
  std::size_t n = 0;
  std::size_t undefined = 0;  // nullopt inputs skipped
};

MeanSem aggregate_mean_sem(std::span<const std::optional<double>> values);

}  // namespace attnmil
