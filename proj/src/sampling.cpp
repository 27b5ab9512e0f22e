#include "landing/sampling.hpp"

#include <cmath>

#include <fmt/format.h>

#include "landing/decompositions.hpp"
#include "landing/errors.hpp"

namespace landing {

Matrix random_stiefel(std::size_t n, std::size_t p, Rng& rng) {
  if (n < p || p == 0) {
    throw ContractViolation(fmt::format("random_stiefel: need n >= p >= 1, got n={}, p={}", n, p));
  }
  return thin_qr(rng.gaussian(n, p)).q;
}

Matrix random_skew(std::size_t n, Rng& rng) { return skew_part(rng.gaussian(n, n)); }

Matrix random_symmetric(std::size_t p, double norm, Rng& rng) {
  Matrix e = sym_part(rng.gaussian(p, p));
  const double f = frobenius_norm(e);
  return e *= (f > 0.0 ? norm / f : 0.0);
}

Matrix safe_point_from(const Matrix& q, const Matrix& e) {
  require_square(e, "safe_point_from");
  if (e.rows() != q.cols()) {
    throw ContractViolation("safe_point_from: E must be p x p for an n x p Q");
  }
  const EigResult eig = sym_eig(sym_part(Matrix::identity(e.rows()) + e));
  std::vector<double> root(eig.values.size());
  for (std::size_t i = 0; i < root.size(); ++i) {
    if (!(eig.values[i] > 0.0)) {
      throw ContractViolation("safe_point_from: I + E is not positive definite");
    }
    root[i] = std::sqrt(eig.values[i]);
  }
  const Matrix half = sym_part(matmul_nt(scale_columns(eig.vectors, root), eig.vectors));
  return matmul(q, half);
}

Matrix random_safe_point(std::size_t n, std::size_t p, double d, Rng& rng) {
  if (!(d >= 0.0) || !(d < 1.0)) {
    throw ContractViolation(fmt::format("random_safe_point: need 0 <= d < 1, got {}", d));
  }
  const Matrix q = random_stiefel(n, p, rng);
  return safe_point_from(q, random_symmetric(p, d, rng));
}

}  // namespace landing
