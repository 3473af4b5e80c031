#include "attnmil/crossval.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "attnmil/error.hpp"

namespace attnmil {

namespace {

FoldOutcome run_cell(const MilDataset& dataset, const std::unordered_map<std::string, std::size_t>& index,
                     const FoldPlan& plan, const CrossvalOptions& options) {
  auto gather = [&](const std::vector<std::string>& ids) {
    std::vector<Bag> bags;
    bags.reserve(ids.size());
    for (const auto& id : ids) bags.push_back(dataset.bags[index.at(id)]);
    return bags;
  };
  auto train = gather(plan.train_ids);
  auto test = gather(plan.test_ids);

  if (options.config.standardize) {
    auto standardizer = fit_standardizer(train);
    train = apply_standardizer(standardizer, train);
    test = apply_standardizer(standardizer, test);
  }
  if (options.config.oversample > 0) {
    Rng rng(Rng::derive(options.master_seed, {2, plan.repetition, plan.fold}));
    train = oversample_negative_bags(train, options.config.oversample, options.size_policy, rng);
  }

  Rng rng(Rng::derive(options.master_seed, {3, plan.repetition, plan.fold}));
  auto trained = train_model(options.method, train, options.config, rng);

  FoldOutcome outcome;
  outcome.repetition = plan.repetition;
  outcome.fold = plan.fold;
  outcome.n_train = train.size();
  std::vector<double> scores;
  std::vector<int> labels, predicted;
  for (const auto& bag : test) {
    auto scored = score_bag(trained.model, bag);
    BagOutcome b{bag.id, bag.label, scored.score, scored.label, {}};
    if (scored.attention) b.attention = scored.attention->collapse_padding();
    scores.push_back(scored.score);
    labels.push_back(bag.label);
    predicted.push_back(scored.label);
    outcome.bags.push_back(std::move(b));
  }
  outcome.metrics = confusion_metrics(predicted, labels);
  outcome.roc = roc_auc(scores, labels);
  outcome.metrics.auc = outcome.roc.auc;
  return outcome;
}

}  // namespace

EvalReport run_crossval(const MilDataset& dataset, const CrossvalOptions& options) {
  options.config.validate();
  dataset.validate();
  require(dataset.count_label(1) > 0 && dataset.count_label(0) > 0, "crossval: dataset needs both classes");

  const auto plans = make_fold_plans(dataset, options.folds, options.repetitions, options.master_seed);
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < dataset.bags.size(); ++i) index.emplace(dataset.bags[i].id, i);

  EvalReport report;
  report.method = options.method;
  report.master_seed = options.master_seed;
  report.repetitions = options.repetitions;
  report.folds = options.folds;
  report.plan_hash = fold_plan_hash(plans);
  report.outcomes.resize(plans.size());

  const std::size_t workers = std::max<std::size_t>(1, std::min(options.threads, plans.size()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    while (true) {
      const std::size_t cell = next.fetch_add(1);
      if (cell >= plans.size()) return;
      try {
        report.outcomes[cell] = run_cell(dataset, index, plans[cell], options);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = plans.size();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& thread : pool) thread.join();
  }
  if (failure) std::rethrow_exception(failure);
  return report;
}

std::vector<std::optional<double>> metric_series(const EvalReport& report, Metric metric, AggregationLevel level) {
  std::vector<std::optional<double>> out;
  if (level == AggregationLevel::fold) {
    for (const auto& o : report.outcomes) out.push_back(metric_value(o.metrics, metric));
    return out;
  }
  std::vector<double> sum(report.repetitions, 0.0);
  std::vector<std::size_t> count(report.repetitions, 0);
  for (const auto& o : report.outcomes) {
    require(o.repetition < report.repetitions, "metric_series: fold record outside the repetition range");
    if (auto v = metric_value(o.metrics, metric)) {
      sum[o.repetition] += *v;
      ++count[o.repetition];
    }
  }
  for (std::size_t r = 0; r < report.repetitions; ++r)
    out.push_back(count[r] ? std::optional(sum[r] / static_cast<double>(count[r])) : std::nullopt);
  return out;
}

MeanSem summarize(const EvalReport& report, Metric metric, AggregationLevel level) {
  return aggregate_mean_sem(metric_series(report, metric, level));
}

bool same_pairing(const EvalReport& a, const EvalReport& b) {
  return a.master_seed == b.master_seed && a.repetitions == b.repetitions && a.folds == b.folds &&
         a.plan_hash == b.plan_hash;
}

std::vector<MetricComparison> compare_reports(const EvalReport& a, const EvalReport& b) {
  require(same_pairing(a, b),
          "compare: reports are not paired (master seed, repetitions, folds and fold plans must all match)");
  std::vector<MetricComparison> out;
  for (auto metric : kAllMetrics) {
    MetricComparison c{metric, {}, {}, {}, 0, 0};
    auto sa = metric_series(a, metric, AggregationLevel::repetition);
    auto sb = metric_series(b, metric, AggregationLevel::repetition);
    std::vector<std::optional<double>> pa, pb;
    std::vector<double> xa, xb;
    for (std::size_t r = 0; r < sa.size(); ++r)
      if (sa[r] && sb[r]) {
        pa.push_back(sa[r]);
        pb.push_back(sb[r]);
        xa.push_back(*sa[r]);
        xb.push_back(*sb[r]);
      }
    c.pairs = xa.size();
    c.a = aggregate_mean_sem(pa);
    c.b = aggregate_mean_sem(pb);
    if (!xa.empty()) {
      c.test = wilcoxon_signed_rank(xa, xb);
      c.direction = *c.a.mean > *c.b.mean ? 1 : (*c.a.mean < *c.b.mean ? -1 : 0);
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace attnmil
