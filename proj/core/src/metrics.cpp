#include "attnmil/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "attnmil/error.hpp"

namespace attnmil {

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::recall: return "recall";
    case Metric::accuracy: return "accuracy";
    case Metric::ppv: return "ppv";
    case Metric::npv: return "npv";
    case Metric::auc: return "auc";
  }
  return "auc";
}

std::optional<double> metric_value(const MetricRecord& record, Metric metric) {
  switch (metric) {
    case Metric::recall: return record.recall;
    case Metric::accuracy: return record.accuracy;
    case Metric::ppv: return record.ppv;
    case Metric::npv: return record.npv;
    case Metric::auc: return record.auc;
  }
  return std::nullopt;
}

namespace {
std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace

MetricRecord metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
  MetricRecord r;
  r.tp = tp;
  r.fp = fp;
  r.tn = tn;
  r.fn = fn;
  r.recall = ratio(tp, tp + fn);
  r.accuracy = ratio(tp + tn, tp + fp + tn + fn);
  r.ppv = ratio(tp, tp + fp);
  r.npv = ratio(tn, tn + fn);
  return r;
}

MetricRecord confusion_metrics(std::span<const int> predicted, std::span<const int> truth) {
  require(predicted.size() == truth.size(), "confusion_metrics: prediction and label counts differ");
  require(!truth.empty(), "confusion_metrics: no samples");
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool p = predicted[i] == 1, t = truth[i] == 1;
    if (p && t) ++tp;
    else if (p) ++fp;
    else if (t) ++fn;
    else ++tn;
  }
  return metrics_from_counts(tp, fp, tn, fn);
}

RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels) {
  require(scores.size() == labels.size(), "roc_auc: score and label counts differ");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });

  std::size_t n_pos = 0;
  for (int l : labels) n_pos += l == 1 ? 1 : 0;
  const std::size_t n_neg = labels.size() - n_pos;

  RocCurve curve;
  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  // Walking down the scores, `credit` counts pairs the positive side wins, in halves.
  std::size_t tp = 0, fp = 0;
  double credit2 = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i, group_pos = 0, group_neg = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == 1 ? group_pos : group_neg) += 1;
      ++j;
    }
    // Positives already passed beat every negative in this group; ties count half.
    credit2 += 2.0 * static_cast<double>(tp) * static_cast<double>(group_neg) +
               static_cast<double>(group_pos) * static_cast<double>(group_neg);
    tp += group_pos;
    fp += group_neg;
    curve.points.push_back({scores[order[i]], n_neg ? static_cast<double>(fp) / static_cast<double>(n_neg) : 0.0,
                            n_pos ? static_cast<double>(tp) / static_cast<double>(n_pos) : 0.0});
    i = j;
  }
  if (curve.points.back().fpr != 1.0 || curve.points.back().tpr != 1.0)
    curve.points.push_back({-std::numeric_limits<double>::infinity(), 1.0, 1.0});
  if (n_pos > 0 && n_neg > 0)
    curve.auc = credit2 / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
  return curve;
}

std::vector<CalibrationBin> calibration_curve(std::span<const double> probabilities, std::span<const int> labels,
                                              std::size_t n_bins) {
  require(probabilities.size() == labels.size(), "calibration_curve: probability and label counts differ");
  require(n_bins >= 1, "calibration_curve: need at least one bin");
  std::vector<double> sum_p(n_bins, 0.0), positives(n_bins, 0.0);
  std::vector<std::size_t> count(n_bins, 0);
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const double p = probabilities[i];
    require(p >= 0.0 && p <= 1.0, "calibration_curve: probability outside [0, 1]");
    auto bin = std::min(static_cast<std::size_t>(p * static_cast<double>(n_bins)), n_bins - 1);
    sum_p[bin] += p;
    positives[bin] += labels[i] == 1 ? 1.0 : 0.0;
    ++count[bin];
  }
  std::vector<CalibrationBin> bins;
  const double width = 1.0 / static_cast<double>(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (count[b] == 0) continue;
    const double n = static_cast<double>(count[b]);
    bins.push_back({(static_cast<double>(b) + 0.5) * width, sum_p[b] / n, positives[b] / n, count[b]});
  }
  return bins;
}

MeanSem aggregate_mean_sem(std::span<const std::optional<double>> values) {
  MeanSem out;
  std::vector<double> defined;
  for (const auto& v : values) {
    if (v) defined.push_back(*v);
    else ++out.undefined;
  }
  out.n = defined.size();
  if (defined.empty()) return out;
  const double n = static_cast<double>(defined.size());
  const double mean = std::accumulate(defined.begin(), defined.end(), 0.0) / n;
  out.mean = mean;
  if (defined.size() >= 2) {
    double ss = 0.0;
    for (double v : defined) ss += (v - mean) * (v - mean);
    out.sem = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return out;
}

}  // namespace attnmil
