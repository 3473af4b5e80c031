// Acceptance suite: one PASS/FAIL line per criterion. Optional arguments pick
// criteria by number, e.g. `acceptance 3 4`.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <attnmil/attention_mil.hpp>
#include <attnmil/classifier.hpp>
#include <attnmil/crossval.hpp>
#include <attnmil/gradcheck.hpp>
#include <attnmil/io.hpp>
#include <attnmil/metrics.hpp>
#include <attnmil/persistence.hpp>
#include <attnmil/resampling.hpp>
#include <attnmil/wilcoxon.hpp>

#include "attnmil/commands.hpp"
#include "support/oracles.hpp"

using namespace attnmil;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

Bag random_bag(Rng& rng, std::size_t n, std::size_t dim, int label) {
  Bag bag;
  bag.id = "bag";
  bag.label = label;
  bag.instances.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < bag.instances.size(); ++i) bag.instances.data()[i] = rng.normal();
  return bag;
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "attnmil_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Outcome gradient_correctness() {
  Rng rng(101);
  double worst = 0.0;
  std::size_t checked = 0;
  const int models = 12;
  for (int m = 0; m < models; ++m) {
    const auto D = static_cast<std::size_t>(rng.between(2, 16));
    const auto M = static_cast<std::size_t>(rng.between(2, 8));
    Architecture arch;
    arch.hidden_dims = {static_cast<std::size_t>(rng.between(2, 16)), static_cast<std::size_t>(rng.between(2, 16))};
    arch.embedding_dim = M;
    arch.attention_dim = static_cast<std::size_t>(rng.between(2, 8));
    arch.dropout = 0.0;
    auto model = init_attention_mil(D, arch, rng);
    // Random biases too: with all-zero biases a rectifier input can sit exactly
    // on the kink when every unit of the previous layer is inactive.
    std::vector<double*> params;
    collect_parameters(model, params);
    for (double* p : params) *p += 0.1 * rng.normal();

    auto bag = random_bag(rng, static_cast<std::size_t>(rng.between(1, 12)), D, m % 2);
    Rng unused(0);
    auto loss = [&] { return bce_loss(attn_mil_forward(model, bag, nn::Mode::infer, unused).probability, bag.label).loss; };
    auto pass = attn_mil_forward(model, bag, nn::Mode::train, unused);
    auto grad = AttentionMilGradient::zeros_like(model);
    attn_mil_backward(model, pass, bce_loss(pass.probability, bag.label).gradient, grad);
    std::vector<double> analytic;
    flatten(grad, analytic);
    auto report = grad_check(loss, params, analytic, 1e-5, 1e-4);
    worst = std::max(worst, report.max_relative_error);
    checked += report.checked;
  }
  return {worst < 1e-4, fmt("max relative error %.2e over %zu parameters in %d models", worst, checked, models)};
}

Outcome attention_normalization() {
  Rng rng(202);
  double worst_sum = 0.0, worst_perm = 0.0, worst_alpha = 0.0;
  bool negative = false;
  AttentionMilModel model;
  for (int b = 0; b < 1000; ++b) {
    if (b % 100 == 0) {
      Architecture arch;
      model = init_attention_mil(16, arch, rng);
    }
    const auto n = static_cast<std::size_t>(rng.between(1, 12));
    auto bag = random_bag(rng, n, 16, 1);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span<std::size_t>(order));
    Bag shuffled = bag;
    for (std::size_t i = 0; i < n; ++i)
      shuffled.instances.row(static_cast<Eigen::Index>(i)) = bag.instances.row(static_cast<Eigen::Index>(order[i]));
    auto a = predict_bag(model, bag);
    auto s = predict_bag(model, shuffled);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum += a.report.weights[i];
      negative = negative || a.report.weights[i] < 0.0;
      worst_alpha = std::max(worst_alpha, std::abs(s.report.weights[i] - a.report.weights[order[i]]));
    }
    worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
    worst_perm = std::max(worst_perm, std::abs(a.probability - s.probability));
  }
  const bool ok = worst_sum <= 1e-9 && !negative && worst_perm < 1e-12 && worst_alpha < 1e-12;
  return {ok, fmt("max |sum-1| %.1e, min alpha %s 0, max permutation change %.1e (probability) %.1e (alpha)", worst_sum,
                  negative ? "<" : ">=", worst_perm, worst_alpha)};
}

Outcome auc_equivalence() {
  std::vector<double> hs{0.1, 0.4, 0.35, 0.8};
  std::vector<int> hy{0, 0, 1, 1};
  const double hand = *roc_auc(hs, hy).auc;

  Rng rng(303);
  double worst_trap = 0.0, worst_pair = 0.0;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> s(200);
    std::vector<int> y(200);
    for (std::size_t i = 0; i < 200; ++i) {
      y[i] = static_cast<int>(rng.below(2));
      // Twenty distinct levels force many ties within and across classes.
      s[i] = static_cast<double>(rng.below(20)) / 19.0 + (y[i] ? 0.05 * static_cast<double>(rng.below(3)) : 0.0);
    }
    y[0] = 0;
    y[1] = 1;
    auto roc = roc_auc(s, y);
    std::vector<oracle::XY> line;
    for (const auto& p : roc.points) line.push_back({p.fpr, p.tpr});
    worst_trap = std::max(worst_trap, std::abs(*roc.auc - oracle::trapezoid(line)));
    worst_pair = std::max(worst_pair, std::abs(*roc.auc - oracle::pair_auc(s, y)));
  }
  return {hand == 0.75 && worst_trap <= 1e-12 && worst_pair <= 1e-12,
          fmt("hand case %.17g, max |auc-trapezoid| %.1e, max |auc-pairs| %.1e over 100 sets", hand, worst_trap, worst_pair)};
}

Outcome wilcoxon_correctness() {
  Rng rng(404);
  int mismatches = 0, asymmetric = 0;
  for (int t = 0; t < 50; ++t) {
    const auto n = static_cast<std::size_t>(rng.between(1, 12));
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = static_cast<double>(rng.below(8));
      b[i] = static_cast<double>(rng.below(8));
    }
    const double p = wilcoxon_signed_rank(a, b).p_value;
    mismatches += p != oracle::wilcoxon_enumerated(a, b);
    asymmetric += p != wilcoxon_signed_rank(b, a).p_value;
  }
  std::vector<double> same{0.7, 0.8, 0.9, 0.6};
  const double identical = wilcoxon_signed_rank(same, same).p_value;
  return {mismatches == 0 && asymmetric == 0 && identical == 1.0,
          fmt("%d/50 differ from enumeration, %d/50 change on swap, identical pairs p=%g", mismatches, asymmetric, identical)};
}

Outcome synthetic_benchmark() {
  SyntheticSpec spec;  // 82 positive / 28 negative, D = 103, shift 2.0
  spec.seed = 1;
  auto ds = generate_synthetic(spec);
  CrossvalOptions options;  // lr 1e-4, 500 epochs, k = 5
  options.repetitions = 5;
  options.master_seed = 5;
  options.threads = 1;
  auto report = run_crossval(ds, options);
  const double auc = *summarize(report, Metric::auc, AggregationLevel::repetition).mean;

  std::size_t correct_pos = 0, witness_top = 0;
  for (const auto& fold : report.outcomes)
    for (const auto& bag : fold.bags) {
      if (bag.label != 1 || bag.predicted != 1) continue;
      ++correct_pos;
      const auto top = static_cast<std::size_t>(std::max_element(bag.attention.begin(), bag.attention.end()) - bag.attention.begin());
      const auto& witnesses = ds.witnesses.at(bag.bag_id);
      witness_top += std::find(witnesses.begin(), witnesses.end(), top) != witnesses.end();
    }
  const double rate = correct_pos ? static_cast<double>(witness_top) / static_cast<double>(correct_pos) : 0.0;
  return {auc >= 0.90 && rate >= 0.80,
          fmt("mean AUC %.4f (>= 0.90), witness max-alpha in %zu/%zu correct positives = %.1f%% (>= 80%%)", auc, witness_top,
              correct_pos, 100.0 * rate)};
}

Outcome oversampling_direction() {
  SyntheticSpec spec;
  spec.n_pos = 88;
  spec.n_neg = 22;
  spec.n_signal_dims = 10;
  spec.seed = 7;
  auto ds = generate_synthetic(spec);
  CrossvalOptions options;
  options.config.epochs = 200;
  options.repetitions = 20;
  options.master_seed = 11;
  options.threads = 1;
  auto plain = run_crossval(ds, options);
  options.config.oversample = 60;
  auto over = run_crossval(ds, options);

  auto a = metric_series(over, Metric::auc, AggregationLevel::repetition);
  auto b = metric_series(plain, Metric::auc, AggregationLevel::repetition);
  std::vector<double> va, vb;
  int wins = 0;
  for (std::size_t r = 0; r < a.size(); ++r) {
    va.push_back(*a[r]);
    vb.push_back(*b[r]);
    wins += *a[r] > *b[r];
  }
  const auto test = wilcoxon_signed_rank(va, vb);
  const double ma = *summarize(over, Metric::auc, AggregationLevel::repetition).mean;
  const double mb = *summarize(plain, Metric::auc, AggregationLevel::repetition).mean;
  return {wins >= 15 && test.p_value < 0.05,
          fmt("oversampled AUC higher in %d/20 repetitions (>= 15), mean %.4f vs %.4f, Wilcoxon p=%.3g (< 0.05)", wins, ma, mb,
              test.p_value)};
}

Outcome counting_checks() {
  SyntheticSpec spec;
  spec.seed = 2;
  auto ds = generate_synthetic(spec);
  CrossvalOptions options;
  options.method = Method::mi_svm;
  options.config.svm.inner_epochs = 20;
  options.config.oversample = 60;
  options.repetitions = 20;
  options.master_seed = 3;
  auto report = run_crossval(ds, options);

  std::size_t leaked = 0, wrong_train = 0;
  for (const auto& fold : report.outcomes) {
    wrong_train += fold.n_train != 148;
    for (const auto& bag : fold.bags) leaked += bag.bag_id.rfind(kSyntheticPrefix, 0) == 0;
  }
  for (const auto& plan : make_fold_plans(ds, 5, 20, 3))
    for (const auto& id : plan.test_ids) leaked += id.rfind(kSyntheticPrefix, 0) == 0;

  auto plans = stratified_kfold(ds, 5, 0, 1);
  std::vector<Bag> train;
  for (const auto& id : plans[0].train_ids) train.push_back(*ds.find(id));
  Rng rng(4);
  const auto augmented = oversample_negative_bags(train, 60, SizePolicy::empirical, rng).size();

  return {report.outcomes.size() == 100 && train.size() == 88 && augmented == 148 && wrong_train == 0 && leaked == 0,
          fmt("%zu fold records, %zu + 60 -> %zu training bags, %zu folds with other training sizes, %zu synthetic ids in test folds",
              report.outcomes.size(), train.size(), augmented, wrong_train, leaked)};
}

std::map<std::string, std::string> report_files(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) files[entry.path().filename().string()] = io::read_file(entry.path());
  return files;
}

Outcome determinism() {
  auto run = [](const char* threads, const fs::path& out) {
    ::setenv("ATTNMIL_THREADS", threads, 1);
    std::ostringstream sink;
    const int code = cli::run({"crossval", "--pos", "40", "--neg", "15", "--data-seed", "6", "--seed", "8", "--repetitions", "3",
                               "--epochs", "30", "--oversample", "10", "--out", out.string()},
                              sink, sink);
    ::unsetenv("ATTNMIL_THREADS");
    return code;
  };
  // Same output directory each time, so the echoed config matches too.
  const auto dir = scratch("determinism");
  int codes = run("1", dir);
  const auto fa = report_files(dir);
  codes += run("4", dir);
  const auto fb = report_files(dir);
  codes += run("1", dir);
  const auto fc = report_files(dir);
  return {codes == 0 && !fa.empty() && fa == fb && fa == fc,
          fmt("%zu report files, ATTNMIL_THREADS=1 vs 4 %s, repeated run %s", fa.size(), fa == fb ? "identical" : "DIFFERENT",
              fa == fc ? "identical" : "DIFFERENT")};
}

Outcome persistence_round_trip() {
  SyntheticSpec spec;
  spec.n_pos = 20;
  spec.n_neg = 15;
  spec.feature_dim = 12;
  spec.n_signal_dims = 4;
  spec.seed = 9;
  auto ds = generate_synthetic(spec);
  auto standardizer = fit_standardizer(ds.bags);
  auto bags = apply_standardizer(standardizer, ds.bags);
  TrainConfig config;
  config.epochs = 20;
  config.learning_rate = 1e-3;
  const auto dir = scratch("persistence");
  double worst = 0.0;
  std::string kinds;
  for (auto method : {Method::attention_mil, Method::mi_net, Method::mi_svm}) {
    Rng rng(10);
    auto trained = train_model(method, bags, config, rng);
    const auto path = dir / (std::string(to_string(method)) + ".txt");
    save_model(path, {trained.model, standardizer});
    auto loaded = load_model(path);
    const auto reloaded = apply_standardizer(*loaded.standardizer, ds.bags);
    for (std::size_t i = 0; i < bags.size(); ++i) {
      auto before = score_bag(trained.model, bags[i]);
      auto after = score_bag(loaded.model, reloaded[i]);
      worst = std::max(worst, std::abs(before.score - after.score));
      if (before.attention)
        for (std::size_t k = 0; k < before.attention->weights.size(); ++k)
          worst = std::max(worst, std::abs(before.attention->weights[k] - after.attention->weights[k]));
    }
    kinds += (kinds.empty() ? "" : ", ") + std::string(to_string(method));
  }
  return {worst <= 1e-15, fmt("max |in-memory - reloaded| %.1e over %s", worst, kinds.c_str())};
}

struct Criterion {
  int number;
  const char* name;
  double budget_seconds;  // 0: no stated limit
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "gradient correctness", 30, gradient_correctness},
      {2, "attention normalization", 0, attention_normalization},
      {3, "AUC oracle equivalence", 0, auc_equivalence},
      {4, "Wilcoxon correctness", 0, wilcoxon_correctness},
      {5, "synthetic benchmark", 300, synthetic_benchmark},
      {6, "oversampling direction", 900, oversampling_direction},
      {7, "counting checks", 0, counting_checks},
      {8, "determinism", 0, determinism},
      {9, "persistence round-trip", 0, persistence_round_trip},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!wanted.empty() && !wanted.count(c.number)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string timing = fmt("%.1f s", seconds);
    if (c.budget_seconds > 0) {
      timing += fmt(", limit %.0f s", c.budget_seconds);
      if (seconds >= c.budget_seconds) outcome.pass = false;
    }
    failed += !outcome.pass;
    std::printf("%s  criterion %d  %-24s %s (%s)\n", outcome.pass ? "PASS" : "FAIL", c.number, c.name, outcome.detail.c_str(),
                timing.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
