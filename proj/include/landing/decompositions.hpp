#pragma once

#include <vector>

#include "landing/matrix.hpp"

namespace landing {

struct QrResult {
  Matrix q;  // n x p, orthonormal columns
  Matrix r;  // p x p, upper triangular with positive diagonal
};

/// Householder thin QR of an n x p matrix (n >= p). The sign of each column
/// of q is fixed so that diag(r) > 0, which makes the factorization unique.
/// Throws SingularityError when |r_kk| < 1e-12 * ||m||.
QrResult thin_qr(const Matrix& m);

struct EigResult {
  std::vector<double> values;  // ascending
  Matrix vectors;              // columns are eigenvectors
};

/// Cyclic Jacobi eigensolver for symmetric matrices.
EigResult sym_eig(const Matrix& s);

/// s^{-1/2} for symmetric positive definite s.
Matrix spd_inv_sqrt(const Matrix& s);

struct SvdResult {
  Matrix u;                   // n x p
  std::vector<double> sigma;  // descending, nonnegative
  Matrix v;                   // p x p
};

/// Thin SVD through the eigendecomposition of m^T m. Singular values below
/// 1e-10 * sigma_max count as zero; their left vectors are completed to an
/// orthonormal basis.
SvdResult thin_svd(const Matrix& m);

}  // namespace landing
