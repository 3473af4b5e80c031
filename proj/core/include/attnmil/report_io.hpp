#pragma once

#include <filesystem>
#include <string>

#include "attnmil/crossval.hpp"

namespace attnmil {

/// Files written into a report directory (all comma-separated with a header):
///   folds.csv        one row per (repetition, fold, method): counts and metrics, NA when undefined
///   repetitions.csv  repetition-level metric values
///   summary.csv      mean and SEM per metric
///   predictions.csv  every scored test bag
///   roc.csv          ROC points per fold
///   calibration.csv  pooled calibration bins (probability methods only)
///   run.meta         key=value pairing metadata read back by compare
void write_report(const std::filesystem::path& dir, const EvalReport& report, AggregationLevel level,
                  std::size_t calibration_bins = 10);

// Restores the pairing metadata and the per-fold metric records.
EvalReport read_report(const std::filesystem::path& dir);

std::string format_comparison(const std::vector<MetricComparison>& comparisons, const std::string& name_a,
                              const std::string& name_b);

}  // namespace attnmil
