#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace evadex {

/// SplitMix64 finalizer. Used to mix a global seed with a sample id so that
/// per-sample random streams do not depend on scheduling order.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t global_seed, std::uint64_t stream_id);

/// Seeded generator with platform-independent draws. The standard
/// distributions are implementation-defined, so every draw here is computed
/// directly from mt19937_64 output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  bool coin() { return (engine_() >> 63) != 0; }
  bool bernoulli(double p) { return uniform() < p; }
  // Uniform in [0, n). n must be > 0.
  std::size_t index(std::size_t n);
  double normal();

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace evadex
