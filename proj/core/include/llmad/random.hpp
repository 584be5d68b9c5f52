#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace llmad {

/// Seedable generator with fully specified sampling transforms.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Distribution transforms are implemented here rather than taken
/// from <random> so that draws do not depend on the standard library vendor:
///   - uniform01: top 53 bits of one engine output, times 2^-53.
///   - uniform_int(lo, hi): Lemire's nearly-divisionless bounded method.
///   - normal: Marsaglia polar method, caching the second variate.
///   - gamma(shape): Marsaglia-Tsang squeeze; shape < 1 boosted by U^(1/shape).
///   - dirichlet: independent gamma draws, normalised.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  /// Uniform over the closed integer range [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  double gamma(double shape);
  std::vector<double> dirichlet(double alpha, std::size_t dims);
  /// Samples an index from unnormalised non-negative weights.
  std::size_t categorical(const std::vector<double>& weights);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finaliser, used to derive independent per-item seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace llmad
