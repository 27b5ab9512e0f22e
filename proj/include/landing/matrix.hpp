#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace landing {

/// Dense row-major matrix of doubles.
///
/// Carries iterates, gradients and fields. A default-constructed matrix is
/// empty (0x0); every named operation below rejects empty or non-finite input.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  /// Leading rows x cols block of the identity (orthonormal when rows >= cols).
  static Matrix identity(std::size_t rows, std::size_t cols);
  static Matrix diagonal(std::span<const double> d);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool is_square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  Matrix transpose() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s) noexcept;
  /// this += s * other
  Matrix& add_scaled(const Matrix& other, double s);

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator-(Matrix a);
Matrix operator*(double s, Matrix a);
Matrix operator*(Matrix a, double s);

/// a * b. The k-summation for every entry runs in increasing k starting from
/// zero, so results are bit-identical to a naive triple loop.
Matrix matmul(const Matrix& a, const Matrix& b);
/// a^T * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a * b^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);

Matrix skew_part(const Matrix& m);
Matrix sym_part(const Matrix& m);

double frobenius_norm(const Matrix& m);
double frobenius_norm_sq(const Matrix& m);
/// Frobenius inner product <a, b> = trace(a^T b).
double inner(const Matrix& a, const Matrix& b);
double max_abs(const Matrix& m);
double trace(const Matrix& m);

/// m - I (m square).
Matrix minus_identity(Matrix m);
/// Scales column j of m by d[j].
Matrix scale_columns(Matrix m, std::span<const double> d);

bool all_finite(const Matrix& m) noexcept;

void require_finite(const Matrix& m, std::string_view what);
void require_nonempty(const Matrix& m, std::string_view what);
void require_same_shape(const Matrix& a, const Matrix& b, std::string_view what);
void require_square(const Matrix& m, std::string_view what);

}  // namespace landing
