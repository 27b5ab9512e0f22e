#include "landing/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "landing/decompositions.hpp"
#include "landing/errors.hpp"
#include "landing/sampling.hpp"

namespace landing {

namespace {

void require_shape(const Matrix& x, std::size_t n, std::size_t p, std::string_view what) {
  require_finite(x, what);
  if (x.rows() != n || x.cols() != p) {
    throw ContractViolation(
        fmt::format("{}: expected a {}x{} iterate, got {}x{}", what, n, p, x.rows(), x.cols()));
  }
}

void require_indices(std::span<const std::size_t> idx, std::size_t big_n, std::string_view what) {
  if (idx.empty()) throw ContractViolation(fmt::format("{}: empty index set", what));
  for (std::size_t i : idx) {
    if (i >= big_n) {
      throw ContractViolation(fmt::format("{}: sample index {} out of range [0, {})", what, i, big_n));
    }
  }
}

Matrix gather_rows(const Matrix& a, std::span<const std::size_t> idx) {
  Matrix out(idx.size(), a.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    std::copy(a.row(idx[k]).begin(), a.row(idx[k]).end(), out.row(k).begin());
  }
  return out;
}

double spectral_norm_sym(const Matrix& s) {
  const EigResult e = sym_eig(s);
  return std::max(std::abs(e.values.front()), std::abs(e.values.back()));
}

/// Bounds shared by the quadratic objectives, with c the spectral norm of
/// the (symmetric) Hessian of f.
SmoothnessConstants quadratic_constants(double c, double s_bound, std::size_t p, double eps) {
  SmoothnessConstants k;
  const double sp = std::sqrt(static_cast<double>(p));
  k.L_smooth = c;
  k.s_bound = s_bound;
  const double grad_bound = c * std::sqrt(static_cast<double>(p) + eps * sp);
  k.L_hat = std::max(c, grad_bound);
  k.L_fh = c * (2.0 + 6.0 * (1.0 + eps));
  k.a_tilde = grad_bound * (1.0 + eps);
  return k;
}

}  // namespace

// ---------------------------------------------------------------- PCA

PcaObjective::PcaObjective(Matrix data, std::size_t p) : data_(std::move(data)), p_(p) {
  require_finite(data_, "PcaObjective");
  if (p_ == 0 || p_ > data_.cols()) {
    throw ContractViolation(fmt::format("PcaObjective: need 1 <= p <= n, got p={}, n={}", p_,
                                        data_.cols()));
  }
}

const Matrix& PcaObjective::second_moment() const {
  std::call_once(moment_once_, [&] {
    moment_ = sym_part(matmul_tn(data_, data_));
    moment_ *= 1.0 / static_cast<double>(data_.rows());
  });
  return moment_;
}

double PcaObjective::value(const Matrix& x) const {
  require_shape(x, n(), p_, "pca value");
  if (sample_count() < n()) {
    return -0.5 * frobenius_norm_sq(matmul(data_, x)) / static_cast<double>(sample_count());
  }
  return -0.5 * inner(x, matmul(second_moment(), x));
}

Matrix PcaObjective::grad_full(const Matrix& x) const {
  require_shape(x, n(), p_, "pca gradient");
  if (sample_count() < n()) {
    return matmul_tn(data_, matmul(data_, x)) *= -1.0 / static_cast<double>(sample_count());
  }
  return -matmul(second_moment(), x);
}

Matrix PcaObjective::grad_samples(std::span<const std::size_t> idx, const Matrix& x) const {
  require_shape(x, n(), p_, "pca gradient");
  require_indices(idx, sample_count(), "pca gradient");
  const Matrix ab = gather_rows(data_, idx);
  return matmul_tn(ab, matmul(ab, x)) *= -1.0 / static_cast<double>(idx.size());
}

Matrix PcaObjective::grad_sample(std::size_t i, const Matrix& x) const {
  require_shape(x, n(), p_, "pca gradient");
  require_indices(std::span<const std::size_t>(&i, 1), sample_count(), "pca gradient");
  const auto a = data_.row(i);
  std::vector<double> ax(p_, 0.0);
  for (std::size_t k = 0; k < n(); ++k) {
    const auto xr = x.row(k);
    for (std::size_t j = 0; j < p_; ++j) ax[j] += a[k] * xr[j];
  }
  Matrix g(n(), p_);
  for (std::size_t k = 0; k < n(); ++k) {
    for (std::size_t j = 0; j < p_; ++j) g(k, j) = -a[k] * ax[j];
  }
  return g;
}

std::optional<SmoothnessConstants> PcaObjective::analytic_constants(double epsilon) const {
  // A A^T / N has the same nonzero spectrum; use whichever Gram is smaller
  const double c = data_.rows() < data_.cols()
                       ? spectral_norm_sym(sym_part(matmul_nt(data_, data_))) / static_cast<double>(data_.rows())
                       : spectral_norm_sym(second_moment());
  // X^T C X is dominated by c X^T X in the PSD order
  const double s = c * (std::sqrt(static_cast<double>(p_)) + epsilon);
  return quadratic_constants(c, s, p_, epsilon);
}

double PcaObjective::optimal_value() const {
  const EigResult e = sym_eig(second_moment());
  double acc = 0.0;
  for (std::size_t k = 0; k < p_; ++k) acc += e.values[n() - 1 - k];
  return -0.5 * acc;
}

Matrix PcaObjective::top_eigenvectors() const {
  const EigResult e = sym_eig(second_moment());
  Matrix u(n(), p_);
  for (std::size_t k = 0; k < p_; ++k) {
    for (std::size_t i = 0; i < n(); ++i) u(i, k) = e.vectors(i, n() - 1 - k);
  }
  return u;
}

// ---------------------------------------------------------------- ICA

double logcosh(double x) {
  const double a = std::abs(x);
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

IcaObjective::IcaObjective(Matrix data, std::size_t p) : data_(std::move(data)), p_(p) {
  require_finite(data_, "IcaObjective");
  if (p_ == 0 || p_ > data_.cols()) {
    throw ContractViolation(fmt::format("IcaObjective: need 1 <= p <= n, got p={}, n={}", p_,
                                        data_.cols()));
  }
}

double IcaObjective::value(const Matrix& x) const {
  require_shape(x, n(), p_, "ica value");
  const Matrix ax = matmul(data_, x);
  double acc = 0.0;
  for (double v : ax.values()) acc += logcosh(v);
  return acc / static_cast<double>(sample_count());
}

Matrix IcaObjective::grad_full(const Matrix& x) const {
  require_shape(x, n(), p_, "ica gradient");
  Matrix t = matmul(data_, x);
  for (double& v : t.values()) v = std::tanh(v);
  return matmul_tn(data_, t) *= 1.0 / static_cast<double>(sample_count());
}

Matrix IcaObjective::grad_samples(std::span<const std::size_t> idx, const Matrix& x) const {
  require_shape(x, n(), p_, "ica gradient");
  require_indices(idx, sample_count(), "ica gradient");
  const Matrix ab = gather_rows(data_, idx);
  Matrix t = matmul(ab, x);
  for (double& v : t.values()) v = std::tanh(v);
  return matmul_tn(ab, t) *= 1.0 / static_cast<double>(idx.size());
}

Matrix IcaObjective::grad_sample(std::size_t i, const Matrix& x) const {
  require_shape(x, n(), p_, "ica gradient");
  require_indices(std::span<const std::size_t>(&i, 1), sample_count(), "ica gradient");
  const auto a = data_.row(i);
  std::vector<double> t(p_, 0.0);
  for (std::size_t k = 0; k < n(); ++k) {
    const auto xr = x.row(k);
    for (std::size_t j = 0; j < p_; ++j) t[j] += a[k] * xr[j];
  }
  for (double& v : t) v = std::tanh(v);
  Matrix g(n(), p_);
  for (std::size_t k = 0; k < n(); ++k) {
    for (std::size_t j = 0; j < p_; ++j) g(k, j) = a[k] * t[j];
  }
  return g;
}

// ---------------------------------------------------------------- linear / quadratic

LinearObjective::LinearObjective(Matrix m) : m_(std::move(m)) {
  require_finite(m_, "LinearObjective");
}

double LinearObjective::value(const Matrix& x) const {
  require_shape(x, n(), p(), "linear value");
  return inner(m_, x);
}

Matrix LinearObjective::grad_full(const Matrix& x) const {
  require_shape(x, n(), p(), "linear gradient");
  return m_;
}

Matrix LinearObjective::grad_samples(std::span<const std::size_t> idx, const Matrix& x) const {
  require_indices(idx, 1, "linear gradient");
  return grad_full(x);
}

std::optional<SmoothnessConstants> LinearObjective::analytic_constants(double epsilon) const {
  const double mn = frobenius_norm(m_);
  const double root = std::sqrt(1.0 + epsilon);
  SmoothnessConstants k;
  k.L_smooth = 0.0;
  k.s_bound = mn * root;
  k.L_hat = mn;
  k.L_fh = 3.0 * mn * root;
  k.a_tilde = mn * (1.0 + epsilon);
  return k;
}

QuadraticObjective::QuadraticObjective(Matrix c, std::size_t p) : c_(std::move(c)), p_(p) {
  require_square(c_, "QuadraticObjective");
  require_finite(c_, "QuadraticObjective");
  if (max_abs(c_ - c_.transpose()) > 0.0) {
    throw ContractViolation("QuadraticObjective: C must be symmetric");
  }
  if (p_ == 0 || p_ > c_.rows()) {
    throw ContractViolation("QuadraticObjective: need 1 <= p <= n");
  }
  spectral_norm_ = spectral_norm_sym(c_);
}

double QuadraticObjective::value(const Matrix& x) const {
  require_shape(x, n(), p_, "quadratic value");
  return 0.5 * inner(x, matmul(c_, x));
}

Matrix QuadraticObjective::grad_full(const Matrix& x) const {
  require_shape(x, n(), p_, "quadratic gradient");
  return matmul(c_, x);
}

Matrix QuadraticObjective::grad_samples(std::span<const std::size_t> idx, const Matrix& x) const {
  require_indices(idx, 1, "quadratic gradient");
  return grad_full(x);
}

std::optional<SmoothnessConstants> QuadraticObjective::analytic_constants(double epsilon) const {
  // C may be indefinite, so only ||X^T C X|| <= c ||X||_2 ||X||_F is available
  const double pe = static_cast<double>(p_) + epsilon * std::sqrt(static_cast<double>(p_));
  const double s = spectral_norm_ * std::sqrt((1.0 + epsilon) * pe);
  return quadratic_constants(spectral_norm_, s, p_, epsilon);
}

// ---------------------------------------------------------------- data

PcaInstance gen_pca_data(std::size_t n, std::size_t p, std::size_t big_n, double sigma,
                         std::uint64_t seed) {
  if (p == 0 || p > n || big_n == 0) {
    throw ContractViolation(
        fmt::format("gen_pca_data: need 1 <= p <= n and N >= 1 (n={}, p={}, N={})", n, p, big_n));
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw ContractViolation(fmt::format("gen_pca_data: sigma must be >= 0, got {}", sigma));
  }
  Rng rng(seed, Stream::data);
  PcaInstance inst;
  inst.seed = seed;
  inst.noise_sigma = sigma;
  inst.planted_u = random_stiefel(n, p, rng);
  inst.data = Matrix(big_n, n);
  const double noise = std::sqrt(sigma);
  std::vector<double> z(p);
  for (std::size_t r = 0; r < big_n; ++r) {
    for (double& v : z) v = rng.normal();
    auto row = inst.data.row(r);
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t k = 0; k < p; ++k) acc += inst.planted_u(i, k) * z[k];
      row[i] = acc + noise * rng.normal();
    }
  }
  return inst;
}

IcaInstance gen_ica_data(std::size_t n, std::size_t big_n, std::uint64_t seed) {
  if (n == 0 || big_n == 0) {
    throw ContractViolation("gen_ica_data: need n >= 1 and N >= 1");
  }
  Rng rng(seed, Stream::data);
  IcaInstance inst;
  inst.seed = seed;
  inst.sources = Matrix(big_n, n);
  for (double& v : inst.sources.values()) v = rng.laplace();
  inst.mixing = random_stiefel(n, n, rng);
  inst.data = matmul_nt(inst.sources, inst.mixing);
  return inst;
}

// ---------------------------------------------------------------- oracles

double penalty_root(double c) {
  if (!(c >= 0.0) || !std::isfinite(c)) {
    throw ContractViolation(fmt::format("penalty_root: need c >= 0, got {}", c));
  }
  if (c == 0.0) return 1.0;
  // h(x) = x^3 - x is increasing on [1, inf), h(1) = 0 < c and h(1 + c) >= c
  double lo = 1.0;
  double hi = 1.0 + c;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid * mid * mid - mid < c) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 4; ++it) {
    const double h = x * x * x - x - c;
    const double dh = 3.0 * x * x - 1.0;
    const double step = h / dh;
    x -= step;
    if (std::abs(step) <= 1e-16 * x) break;
  }
  return x;
}

PenaltyOracle penalty_oracle(const Matrix& m, double lambda_pen) {
  if (!(lambda_pen > 0.0) || !std::isfinite(lambda_pen)) {
    throw ContractViolation(
        fmt::format("penalty_oracle: lambda must be positive, got {}", lambda_pen));
  }
  const SvdResult svd = thin_svd(m);
  if (svd.sigma.back() <= 0.0) {
    throw SingularityError(fmt::format(
        "penalty_oracle: M is rank deficient (sigma_min below 1e-10 sigma_max = {:.3e})",
        svd.sigma.front()));
  }
  PenaltyOracle out;
  out.sigma_star.resize(svd.sigma.size());
  for (std::size_t k = 0; k < svd.sigma.size(); ++k) {
    out.sigma_star[k] = penalty_root(svd.sigma[k] / lambda_pen);
  }
  out.x_star = -matmul_nt(scale_columns(svd.u, out.sigma_star), svd.v);
  out.x_stiefel = -matmul_nt(svd.u, svd.v);
  return out;
}

double amari_distance(const Matrix& p) {
  require_finite(p, "amari_distance");
  require_square(p, "amari_distance");
  const std::size_t n = p.rows();
  if (n < 2) return 0.0;
  double rows = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    double mx = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      sum += std::abs(p(i, j));
      mx = std::max(mx, std::abs(p(i, j)));
    }
    if (mx == 0.0) throw ContractViolation("amari_distance: zero row");
    rows += sum / mx - 1.0;
  }
  double cols = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double sum = 0.0;
    double mx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum += std::abs(p(i, j));
      mx = std::max(mx, std::abs(p(i, j)));
    }
    if (mx == 0.0) throw ContractViolation("amari_distance: zero column");
    cols += sum / mx - 1.0;
  }
  return (rows + cols) / (2.0 * static_cast<double>(n) * static_cast<double>(n - 1));
}

double max_principal_angle(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_principal_angle");
  const Matrix qa = thin_qr(a).q;
  const Matrix qb = thin_qr(b).q;
  // sine of the largest angle is the spectral norm of (I - Qb Qb^T) Qa
  Matrix resid = qa;
  resid -= matmul(qb, matmul_tn(qb, qa));
  const double s = thin_svd(resid).sigma.front();
  return std::asin(std::min(1.0, s));
}

}  // namespace landing
