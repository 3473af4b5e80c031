#include "attnmil/report_io.hpp"

#include <map>
#include <sstream>

#include "attnmil/error.hpp"
#include "attnmil/io.hpp"

namespace attnmil {

namespace {

std::string cell(const std::optional<double>& v) { return v ? io::format_double(*v) : "NA"; }

std::string level_name(AggregationLevel level) { return level == AggregationLevel::fold ? "fold" : "repetition"; }

std::vector<std::vector<std::string>> read_table(const std::filesystem::path& path, std::string_view expected_header) {
  std::istringstream in(io::read_file(path));
  std::string line;
  std::vector<std::vector<std::string>> rows;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      if (line != expected_header) fail(path.string() + ": unexpected header");
      header = false;
      continue;
    }
    std::vector<std::string> cells;
    for (auto c : io::split(line, ',')) cells.emplace_back(c);
    rows.push_back(std::move(cells));
  }
  return rows;
}

constexpr std::string_view kFoldsHeader =
    "repetition,fold,method,n_train,n_test,tp,fp,tn,fn,recall,accuracy,ppv,npv,auc";

}  // namespace

void write_report(const std::filesystem::path& dir, const EvalReport& report, AggregationLevel level,
                  std::size_t calibration_bins) {
  std::filesystem::create_directories(dir);
  const std::string method(to_string(report.method));

  std::string folds = std::string(kFoldsHeader) + "\n";
  std::string predictions = "repetition,fold,bag_id,label,score,predicted\n";
  std::string roc = "repetition,fold,threshold,fpr,tpr\n";
  std::vector<double> probabilities;
  std::vector<int> labels;
  for (const auto& o : report.outcomes) {
    const auto& m = o.metrics;
    const std::string key = std::to_string(o.repetition) + "," + std::to_string(o.fold);
    folds += key + "," + method + "," + std::to_string(o.n_train) + "," + std::to_string(o.bags.size()) + "," +
             std::to_string(m.tp) + "," + std::to_string(m.fp) + "," + std::to_string(m.tn) + "," +
             std::to_string(m.fn) + "," + cell(m.recall) + "," + cell(m.accuracy) + "," + cell(m.ppv) + "," +
             cell(m.npv) + "," + cell(m.auc) + "\n";
    for (const auto& b : o.bags) {
      predictions += key + "," + b.bag_id + "," + std::to_string(b.label) + "," + io::format_double(b.score) + "," +
                     std::to_string(b.predicted) + "\n";
      probabilities.push_back(b.score);
      labels.push_back(b.label);
    }
    for (const auto& p : o.roc.points)
      roc += key + "," + io::format_double(p.threshold) + "," + io::format_double(p.fpr) + "," +
             io::format_double(p.tpr) + "\n";
  }

  std::string repetitions = "repetition";
  std::string summary = "metric,mean,sem,n,undefined,level\n";
  std::vector<std::vector<std::optional<double>>> per_rep;
  for (auto metric : kAllMetrics) {
    repetitions += "," + std::string(to_string(metric));
    per_rep.push_back(metric_series(report, metric, AggregationLevel::repetition));
    auto s = summarize(report, metric, level);
    summary += std::string(to_string(metric)) + "," + cell(s.mean) + "," + cell(s.sem) + "," + std::to_string(s.n) +
               "," + std::to_string(s.undefined) + "," + level_name(level) + "\n";
  }
  repetitions += "\n";
  for (std::size_t r = 0; r < report.repetitions; ++r) {
    repetitions += std::to_string(r);
    for (const auto& series : per_rep) repetitions += "," + cell(series[r]);
    repetitions += "\n";
  }

  std::string meta = "format=1\nmethod=" + method + "\nmaster_seed=" + std::to_string(report.master_seed) +
                     "\nrepetitions=" + std::to_string(report.repetitions) + "\nfolds=" +
                     std::to_string(report.folds) + "\nfold_plan_hash=" + std::to_string(report.plan_hash) +
                     "\nrecords=" + std::to_string(report.outcomes.size()) + "\n";

  io::write_file_atomic(dir / "folds.csv", folds);
  io::write_file_atomic(dir / "repetitions.csv", repetitions);
  io::write_file_atomic(dir / "summary.csv", summary);
  io::write_file_atomic(dir / "predictions.csv", predictions);
  io::write_file_atomic(dir / "roc.csv", roc);
  if (report.method != Method::mi_svm) {
    std::string calibration = "bin_center,mean_predicted,observed_fraction,count\n";
    for (const auto& bin : calibration_curve(probabilities, labels, calibration_bins))
      calibration += io::format_double(bin.center) + "," + io::format_double(bin.mean_predicted) + "," +
                     io::format_double(bin.observed_fraction) + "," + std::to_string(bin.count) + "\n";
    io::write_file_atomic(dir / "calibration.csv", calibration);
  }
  io::write_file_atomic(dir / "run.meta", meta);
}

EvalReport read_report(const std::filesystem::path& dir) {
  std::map<std::string, std::string> meta;
  {
    std::istringstream in(io::read_file(dir / "run.meta"));
    std::string line;
    while (std::getline(in, line)) {
      auto eq = line.find('=');
      if (eq != std::string::npos) meta[line.substr(0, eq)] = line.substr(eq + 1);
    }
  }
  auto number = [&](const std::string& key) {
    auto it = meta.find(key);
    auto v = it == meta.end() ? std::nullopt : io::parse_u64(it->second);
    if (!v) fail((dir / "run.meta").string() + ": missing or malformed '" + key + "'");
    return *v;
  };
  EvalReport report;
  if (!meta.count("method")) fail((dir / "run.meta").string() + ": missing 'method'");
  report.method = parse_method(meta["method"]);
  report.master_seed = number("master_seed");
  report.repetitions = static_cast<std::size_t>(number("repetitions"));
  report.folds = static_cast<std::size_t>(number("folds"));
  report.plan_hash = number("fold_plan_hash");

  for (const auto& row : read_table(dir / "folds.csv", kFoldsHeader)) {
    if (row.size() != 14) fail((dir / "folds.csv").string() + ": malformed row");
    auto count = [&](std::size_t i) {
      auto v = io::parse_u64(row[i]);
      if (!v) fail((dir / "folds.csv").string() + ": malformed count");
      return static_cast<std::size_t>(*v);
    };
    FoldOutcome o;
    o.repetition = count(0);
    o.fold = count(1);
    o.n_train = count(3);
    o.metrics = metrics_from_counts(count(5), count(6), count(7), count(8));
    if (row[13] != "NA") o.metrics.auc = io::parse_double(row[13]);
    report.outcomes.push_back(std::move(o));
  }
  if (report.outcomes.size() != number("records")) fail((dir / "folds.csv").string() + ": record count does not match run.meta");
  return report;
}

std::string format_comparison(const std::vector<MetricComparison>& comparisons, const std::string& name_a,
                              const std::string& name_b) {
  std::string out = "metric,mean_a,mean_b,pairs,w_statistic,p_value,exact,direction\n";
  for (const auto& c : comparisons) {
    std::string direction = c.direction > 0 ? name_a + ">" + name_b : c.direction < 0 ? name_b + ">" + name_a : "equal";
    out += std::string(to_string(c.metric)) + "," + cell(c.a.mean) + "," + cell(c.b.mean) + "," +
           std::to_string(c.pairs) + "," + io::format_double(c.test.statistic) + "," +
           io::format_double(c.test.p_value) + "," + (c.test.exact ? "1" : "0") + "," + direction + "\n";
  }
  return out;
}

}  // namespace attnmil
