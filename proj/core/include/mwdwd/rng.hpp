#pragma once

#include <cstdint>
#include <random>

namespace mwdwd {

/// Seeded random source with portable uniform and normal draws.
///
/// The standard distributions are implementation-defined, so draws are built
/// directly on top of mt19937_64, whose output sequence is fixed by the
/// standard. Independent sub-streams come from `derive(seed, stream)`.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Sub-stream keyed by (seed, stream); distinct keys give unrelated streams.
  static Rng derive(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  /// Standard normal via the polar method.
  double normal();

  /// Uniform integer on [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace mwdwd
