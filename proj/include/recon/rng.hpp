#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace recon {

/// Seeded random stream whose output is identical across platforms.
///
/// Only the raw mt19937_64 engine and std::seed_seq are used from <random>;
/// the distributions are implemented here because the standard ones are
/// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Independent stream derived from a base seed and a fixed label, e.g.
  /// Rng::substream(seed, "simulate").
  static Rng substream(std::uint64_t seed, std::string_view label);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  double normal();

  /// Poisson variate: CDF inversion for mean < 30, rounded normal
  /// approximation clamped at zero above.
  double poisson(double mean);

  template <typename It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      std::uint64_t j = below(i);
      std::swap(first[i - 1], first[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace recon
