#include "landing/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "landing/errors.hpp"

namespace landing {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed, Stream stream)
    : engine_(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream) + 1))) {}

double Rng::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_normal_;
  }
  const double u1 = uniform_open();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  cached_normal_ = r * std::sin(t);
  has_cached_ = true;
  return r * std::cos(t);
}

double Rng::laplace() {
  const double v = uniform_open() - 0.5;
  const double mag = -std::log1p(-2.0 * std::abs(v));
  return v < 0.0 ? -mag : mag;
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw ContractViolation("Rng::index: empty range");
  const std::uint64_t range = n;
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return static_cast<std::size_t>(x % range);
}

Matrix Rng::gaussian(std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = normal();
  return m;
}

}  // namespace landing
