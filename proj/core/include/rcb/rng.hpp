#pragma once

#include <cstdint>
#include <random>

namespace rcb {

/// Deterministic random stream. All sampling goes through hand-rolled
/// transforms (not std:: distributions) so that a given seed produces the
/// same byte-for-byte output everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform draw in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; the paired draw is cached.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  bool bernoulli(double p) { return uniform01() < p; }

  /// Derives an independent substream seed from a master seed and a stream
  /// index (splitmix64 finalizer). This is the documented splitting rule:
  /// replication r uses derive(master, r), and within a run the environment
  /// and the algorithm draw from derive(run_seed, 0) and derive(run_seed, 1).
  static std::uint64_t derive(std::uint64_t master, std::uint64_t stream);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace rcb
