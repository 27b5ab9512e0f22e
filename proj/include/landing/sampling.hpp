#pragma once

#include "landing/matrix.hpp"
#include "landing/rng.hpp"

namespace landing {

/// Haar-distributed point of St(p, n): Q factor of a Gaussian matrix.
Matrix random_stiefel(std::size_t n, std::size_t p, Rng& rng);

/// Random skew-symmetric n x n matrix with Gaussian entries.
Matrix random_skew(std::size_t n, Rng& rng);

/// Random symmetric p x p matrix scaled to Frobenius norm `norm`.
Matrix random_symmetric(std::size_t p, double norm, Rng& rng);

/// X = Q (I + E)^{1/2}, so that X^T X - I = E exactly in exact arithmetic.
/// Requires Q orthonormal and I + E positive definite.
Matrix safe_point_from(const Matrix& q, const Matrix& e);

/// Random point with ||X^T X - I|| = d.
Matrix random_safe_point(std::size_t n, std::size_t p, double d, Rng& rng);

}  // namespace landing
