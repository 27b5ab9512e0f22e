#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include "landing/matrix.hpp"

namespace landing {

/// Constants of f on the safe region that the step-size theory needs.
struct SmoothnessConstants {
  double L_smooth = 0.0;  // Lipschitz constant of the gradient of f
  double s_bound = 0.0;   // sup ||sym(X^T grad f(X))||
  double L_hat = 0.0;     // max(L_smooth, sup ||grad f(X)||)
  double L_fh = 0.0;      // Lipschitz constant of the gradient of f + h
  double a_tilde = 0.0;   // sup ||skew(grad f(X) X^T) X||
};

/// f(X) = (1/N) sum_i f_i(X) on n x p matrices.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::string name() const = 0;
  virtual std::size_t n() const = 0;
  virtual std::size_t p() const = 0;
  virtual std::size_t sample_count() const = 0;

  virtual double value(const Matrix& x) const = 0;
  virtual Matrix grad_full(const Matrix& x) const = 0;
  /// Mean of the per-sample gradients over idx; repeated indices count twice.
  virtual Matrix grad_samples(std::span<const std::size_t> idx, const Matrix& x) const = 0;
  virtual Matrix grad_sample(std::size_t i, const Matrix& x) const {
    return grad_samples(std::span<const std::size_t>(&i, 1), x);
  }

  /// Closed-form constants when the objective admits them.
  virtual std::optional<SmoothnessConstants> analytic_constants(double /*epsilon*/) const {
    return std::nullopt;
  }
};

}  // namespace landing
