#pragma once

#include <cstdint>
#include <random>

namespace pab {

/// splitmix64 step; used to derive independent sub-stream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic sub-seed for stream `stream` of a run seeded with `base`.
/// Every consumer of randomness inside a run gets its own stream so that
/// results do not depend on evaluation order or parallelism.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t s = base ^ (0x6a09e667f3bcc909ULL + stream * 0x9e3779b97f4a7c15ULL);
  splitmix64(s);
  return splitmix64(s);
}

/// Seeded generator handed around explicitly; one per run (or per stream).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() { return unif_(gen_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unif_(gen_); }
  double gaussian() { return normal_(gen_); }
  double gaussian(double mean, double sigma) { return mean + sigma * normal_(gen_); }
  /// Uniform integer in [0, n).
  int uniform_int(int n) {
    return static_cast<int>(std::uniform_int_distribution<int>(0, n - 1)(gen_));
  }
  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace pab
