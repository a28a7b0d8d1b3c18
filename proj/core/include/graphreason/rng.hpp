#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace graphreason {

/// Deterministic random source. The engine is std::mt19937_64 (bit-exact by
/// the standard); the distributions are hand-rolled so that streams do not
/// depend on the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1), 53 bits of entropy.
  double uniform();

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller; caches the spare draw.
  double normal();

  /// Uniform integer in [0, bound), bound > 0.
  std::uint64_t uniform_index(std::uint64_t bound);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace graphreason
