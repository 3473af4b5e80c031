#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <utility>

namespace attnmil {

/// Seeded pseudo-random stream with a platform-independent output sequence.
///
/// The engine is std::mt19937_64, whose raw output is pinned by the C++
/// standard. The standard distributions are not, so every draw below is
/// derived from raw 64-bit words by code in this class:
///   uniform()  - top 53 bits scaled to [0, 1)
///   below(n)   - rejection sampling on the top bits, no modulo bias
///   normal()   - Marsaglia polar method, second variate discarded
class Rng {
public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed), seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t below(std::uint64_t n);
  // Inclusive range.
  std::uint64_t between(std::uint64_t lo, std::uint64_t hi) { return lo + below(hi - lo + 1); }
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      auto j = static_cast<std::size_t>(below(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

  /// Seed for an independent sub-stream, e.g. derive(master, {repetition, fold}).
  /// SplitMix64 finalizer chained over the path components.
  static std::uint64_t derive(std::uint64_t master, std::initializer_list<std::uint64_t> path);

private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
};

}  // namespace attnmil
