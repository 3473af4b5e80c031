#include <benchmark/benchmark.h>

#include <attnmil/attention_mil.hpp>
#include <attnmil/metrics.hpp>
#include <attnmil/wilcoxon.hpp>

using namespace attnmil;

namespace {

Bag random_bag(Rng& rng, std::size_t n, std::size_t dim) {
  Bag bag;
  bag.id = "bench";
  bag.label = 1;
  bag.instances.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < bag.instances.size(); ++i) bag.instances.data()[i] = rng.normal();
  return bag;
}

// One SGD step on a bag of the given size with the default architecture.
void BM_AttentionStep(benchmark::State& state) {
  Rng rng(1);
  auto model = init_attention_mil(kDefaultFeatureDim, Architecture{}, rng);
  auto bag = random_bag(rng, static_cast<std::size_t>(state.range(0)), kDefaultFeatureDim);
  auto grad = AttentionMilGradient::zeros_like(model);
  for (auto _ : state) {
    grad.set_zero();
    auto pass = attn_mil_forward(model, bag, nn::Mode::train, rng);
    attn_mil_backward(model, pass, bce_loss(pass.probability, bag.label).gradient, grad);
    sgd_step(model, grad, 1e-4);
    benchmark::DoNotOptimize(pass.probability);
  }
}
BENCHMARK(BM_AttentionStep)->Arg(1)->Arg(4)->Arg(12);

void BM_AttentionPredict(benchmark::State& state) {
  Rng rng(2);
  auto model = init_attention_mil(kDefaultFeatureDim, Architecture{}, rng);
  auto bag = random_bag(rng, 12, kDefaultFeatureDim);
  for (auto _ : state) benchmark::DoNotOptimize(predict_bag(model, bag).probability);
}
BENCHMARK(BM_AttentionPredict);

void BM_RocAuc(benchmark::State& state) {
  Rng rng(3);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> scores(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = static_cast<int>(rng.below(2));
    scores[i] = static_cast<double>(rng.below(100)) / 100.0;
  }
  for (auto _ : state) benchmark::DoNotOptimize(roc_auc(scores, labels).auc);
}
BENCHMARK(BM_RocAuc)->Arg(22)->Arg(1000)->Arg(100000);

void BM_Wilcoxon(benchmark::State& state) {
  Rng rng(4);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = rng.normal();
    b[i] = rng.normal();
  }
  for (auto _ : state) benchmark::DoNotOptimize(wilcoxon_signed_rank(a, b).p_value);
}
BENCHMARK(BM_Wilcoxon)->Arg(20)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
