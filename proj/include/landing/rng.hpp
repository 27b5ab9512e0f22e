#pragma once

#include <cstdint>
#include <random>

#include "landing/matrix.hpp"

namespace landing {

/// Independent substreams derived from one run seed. Changing the algorithm
/// never perturbs the data stream.
enum class Stream : std::uint64_t { data = 0, init = 1, sampling = 2, diagnostics = 3 };

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// mt19937_64 with distributions implemented here rather than taken from
/// <random>, whose distribution algorithms differ between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, Stream stream);

  std::uint64_t next_u64() { return engine_(); }
  /// [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  /// (0, 1)
  double uniform_open() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }
  double normal();
  /// Laplace(0, 1) by inverse CDF.
  double laplace();
  /// Uniform integer in [0, n), without modulo bias.
  std::size_t index(std::size_t n);

  Matrix gaussian(std::size_t rows, std::size_t cols);

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace landing
