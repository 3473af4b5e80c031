#include "attnmil/rng.hpp"

#include <bit>
#include <cmath>

#include "attnmil/error.hpp"

namespace attnmil {

namespace {
std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t n) {
  require(n > 0, "Rng::below: empty range");
  if (n == 1) return 0;
  const int bits = 64 - std::countl_zero(n - 1);
  while (true) {
    std::uint64_t candidate = engine_() >> (64 - bits);
    if (candidate < n) return candidate;
  }
}

double Rng::normal() {
  while (true) {
    double u = 2.0 * uniform() - 1.0;
    double v = 2.0 * uniform() - 1.0;
    double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

std::uint64_t Rng::derive(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix(master);
  for (auto component : path) h = splitmix(h ^ splitmix(component + 0x632be59bd9b4e019ULL));
  return h;
}

}  // namespace attnmil
