#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace cardiac {

/// Mixes a parent seed with a work-item index into an independent child
/// seed (splitmix64 finalizer). Parallel workers derive their streams from
/// (seed, index) so results do not depend on scheduling.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Deterministic random source. The distributions are implemented here
/// rather than through <random> distribution classes, whose output is
/// implementation-defined; streams are therefore identical across
/// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n); n > 0.
  std::size_t index(std::size_t n);
  /// Standard normal via Box-Muller (one draw per call, no caching).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cardiac
