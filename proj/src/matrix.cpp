#include "landing/matrix.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "landing/errors.hpp"

namespace landing {

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
  if (rows == 0 || cols == 0) {
    throw ContractViolation(fmt::format("Matrix: dimensions must be positive, got {}x{}", rows, cols));
  }
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows == 0 || cols == 0) {
    throw ContractViolation(fmt::format("Matrix: dimensions must be positive, got {}x{}", rows, cols));
  }
  if (data_.size() != rows * cols) {
    throw ContractViolation(
        fmt::format("Matrix: {} values supplied for a {}x{} matrix", data_.size(), rows, cols));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  if (rows_ == 0 || cols_ == 0) {
    throw ContractViolation("Matrix: empty initializer");
  }
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) {
      throw ContractViolation("Matrix: ragged initializer");
    }
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) { return identity(n, n); }

Matrix Matrix::identity(std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < std::min(rows, cols); ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  // blocked to keep both access patterns cache friendly on tall inputs
  constexpr std::size_t kTile = 32;
  for (std::size_t ib = 0; ib < rows_; ib += kTile) {
    const std::size_t ie = std::min(ib + kTile, rows_);
    for (std::size_t jb = 0; jb < cols_; jb += kTile) {
      const std::size_t je = std::min(jb + kTile, cols_);
      for (std::size_t i = ib; i < ie; ++i) {
        for (std::size_t j = jb; j < je; ++j) t(j, i) = (*this)(i, j);
      }
    }
  }
  return t;
}

Matrix& Matrix::operator+=(const Matrix& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) noexcept {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix& Matrix::add_scaled(const Matrix& other, double s) {
  require_same_shape(*this, other, "add_scaled");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * other.data_[i];
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator-(Matrix a) { return a *= -1.0; }
Matrix operator*(double s, Matrix a) { return a *= s; }
Matrix operator*(Matrix a, double s) { return a *= s; }

namespace {

// c += a * b over the k-range [k0, k1) and column range [j0, j1).
void gemm_block(const Matrix& a, const Matrix& b, Matrix& c, std::size_t k0, std::size_t k1,
                std::size_t j0, std::size_t j1) {
  const std::size_t width = j1 - j0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* __restrict crow = c.row(i).data() + j0;
    const double* __restrict arow = a.row(i).data();
    for (std::size_t k = k0; k < k1; ++k) {
      const double aik = arow[k];
      const double* __restrict brow = b.row(k).data() + j0;
      for (std::size_t j = 0; j < width; ++j) crow[j] += aik * brow[j];
    }
  }
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  require_finite(a, "matmul lhs");
  require_finite(b, "matmul rhs");
  if (a.cols() != b.rows()) {
    throw ContractViolation(fmt::format("matmul: inner dimensions differ ({}x{} * {}x{})", a.rows(),
                                        a.cols(), b.rows(), b.cols()));
  }
  Matrix c(a.rows(), b.cols());
  constexpr std::size_t kBlockK = 128;
  constexpr std::size_t kBlockJ = 256;
  // k-blocks are visited in increasing order, which keeps the per-entry
  // summation order identical to the unblocked loop
  for (std::size_t k0 = 0; k0 < a.cols(); k0 += kBlockK) {
    const std::size_t k1 = std::min(k0 + kBlockK, a.cols());
    for (std::size_t j0 = 0; j0 < b.cols(); j0 += kBlockJ) {
      gemm_block(a, b, c, k0, k1, j0, std::min(j0 + kBlockJ, b.cols()));
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require_nonempty(a, "matmul_tn lhs");
  return matmul(a.transpose(), b);
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require_nonempty(b, "matmul_nt rhs");
  return matmul(a, b.transpose());
}

Matrix skew_part(const Matrix& m) {
  require_finite(m, "skew_part");
  require_square(m, "skew_part");
  Matrix s(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = i + 1; j < m.cols(); ++j) {
      const double v = 0.5 * (m(i, j) - m(j, i));
      s(i, j) = v;
      s(j, i) = -v;
    }
  }
  return s;
}

Matrix sym_part(const Matrix& m) {
  require_finite(m, "sym_part");
  require_square(m, "sym_part");
  Matrix s(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    s(i, i) = m(i, i);
    for (std::size_t j = i + 1; j < m.cols(); ++j) {
      const double v = 0.5 * (m(i, j) + m(j, i));
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  return s;
}

double frobenius_norm_sq(const Matrix& m) {
  require_finite(m, "frobenius_norm");
  double acc = 0.0;
  for (double v : m.values()) acc += v * v;
  return acc;
}

double frobenius_norm(const Matrix& m) { return std::sqrt(frobenius_norm_sq(m)); }

double inner(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "inner");
  double acc = 0.0;
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) acc += av[i] * bv[i];
  return acc;
}

double max_abs(const Matrix& m) {
  double r = 0.0;
  for (double v : m.values()) r = std::max(r, std::abs(v));
  return r;
}

double trace(const Matrix& m) {
  require_square(m, "trace");
  double acc = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) acc += m(i, i);
  return acc;
}

Matrix minus_identity(Matrix m) {
  require_square(m, "minus_identity");
  for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) -= 1.0;
  return m;
}

Matrix scale_columns(Matrix m, std::span<const double> d) {
  if (d.size() != m.cols()) {
    throw ContractViolation(
        fmt::format("scale_columns: {} scales for {} columns", d.size(), m.cols()));
  }
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] *= d[j];
  }
  return m;
}

bool all_finite(const Matrix& m) noexcept {
  return std::all_of(m.values().begin(), m.values().end(),
                     [](double v) { return std::isfinite(v); });
}

void require_nonempty(const Matrix& m, std::string_view what) {
  if (m.empty()) throw ContractViolation(fmt::format("{}: empty matrix", what));
}

void require_finite(const Matrix& m, std::string_view what) {
  require_nonempty(m, what);
  if (!all_finite(m)) throw ContractViolation(fmt::format("{}: non-finite entry", what));
}

void require_same_shape(const Matrix& a, const Matrix& b, std::string_view what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ContractViolation(fmt::format("{}: shape mismatch ({}x{} vs {}x{})", what, a.rows(),
                                        a.cols(), b.rows(), b.cols()));
  }
}

void require_square(const Matrix& m, std::string_view what) {
  require_nonempty(m, what);
  if (!m.is_square()) {
    throw ContractViolation(
        fmt::format("{}: expected a square matrix, got {}x{}", what, m.rows(), m.cols()));
  }
}

}  // namespace landing
