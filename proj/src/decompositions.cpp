#include "landing/decompositions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "landing/errors.hpp"

namespace landing {

namespace {

double dot_tail(const double* a, const double* b, std::size_t from, std::size_t to) {
  double acc = 0.0;
  for (std::size_t i = from; i < to; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_tail(double s, const double* x, double* y, std::size_t from, std::size_t to) {
  for (std::size_t i = from; i < to; ++i) y[i] += s * x[i];
}

}  // namespace

QrResult thin_qr(const Matrix& m) {
  require_finite(m, "thin_qr");
  const std::size_t n = m.rows();
  const std::size_t p = m.cols();
  if (n < p) {
    throw ContractViolation(fmt::format("thin_qr: need rows >= cols, got {}x{}", n, p));
  }
  const double scale = frobenius_norm(m);

  // Work on the transpose so every column is a contiguous row.
  Matrix w = m.transpose();
  Matrix refl(p, n);
  Matrix r(p, p);

  for (std::size_t k = 0; k < p; ++k) {
    double* col = w.row(k).data();
    const double norm = std::sqrt(dot_tail(col, col, k, n));
    if (norm < 1e-12 * scale || norm == 0.0) {
      throw SingularityError(
          fmt::format("thin_qr: column {} is linearly dependent on the previous ones "
                      "(residual norm {:.3e}, matrix norm {:.3e})",
                      k, norm, scale));
    }
    const double alpha = col[k] >= 0.0 ? -norm : norm;
    double* v = refl.row(k).data();
    std::copy(col + k, col + n, v + k);
    v[k] -= alpha;
    const double vnorm = std::sqrt(dot_tail(v, v, k, n));
    for (std::size_t i = k; i < n; ++i) v[i] /= vnorm;

    r(k, k) = alpha;
    for (std::size_t j = k + 1; j < p; ++j) {
      double* cj = w.row(j).data();
      axpy_tail(-2.0 * dot_tail(v, cj, k, n), v, cj, k, n);
      r(k, j) = cj[k];
    }
  }

  // Backward accumulation of Q = H_0 ... H_{p-1} [I; 0], again transposed.
  Matrix qt(p, n);
  for (std::size_t j = 0; j < p; ++j) qt(j, j) = 1.0;
  for (std::size_t kk = p; kk-- > 0;) {
    const double* v = refl.row(kk).data();
    for (std::size_t j = kk; j < p; ++j) {
      double* qj = qt.row(j).data();
      axpy_tail(-2.0 * dot_tail(v, qj, kk, n), v, qj, kk, n);
    }
  }

  for (std::size_t k = 0; k < p; ++k) {
    if (r(k, k) < 0.0) {
      for (std::size_t j = k; j < p; ++j) r(k, j) = -r(k, j);
      for (double& x : qt.row(k)) x = -x;
    }
  }
  return {qt.transpose(), std::move(r)};
}

EigResult sym_eig(const Matrix& s) {
  require_finite(s, "sym_eig");
  require_square(s, "sym_eig");
  const std::size_t n = s.rows();
  const double scale = frobenius_norm(s);
  double asym = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) asym = std::max(asym, std::abs(s(i, j) - s(j, i)));
  }
  if (asym > 1e-12 * std::max(scale, 1e-300)) {
    throw ContractViolation(
        fmt::format("sym_eig: input is not symmetric (max |s - s^T| = {:.3e})", asym));
  }

  Matrix a = sym_part(s);
  Matrix v = Matrix::identity(n);
  auto off_norm = [&] {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) acc += a(i, j) * a(i, j);
    }
    return std::sqrt(2.0 * acc);
  };

  constexpr int kMaxSweeps = 50;
  bool converged = false;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (off_norm() <= 1e-14 * scale) {
      converged = true;
      break;
    }
    for (std::size_t ip = 0; ip + 1 < n; ++ip) {
      for (std::size_t iq = ip + 1; iq < n; ++iq) {
        const double apq = a(ip, iq);
        const double g = 100.0 * std::abs(apq);
        // after a few sweeps, drop entries already below the diagonal's precision
        if (sweep > 3 && std::abs(a(ip, ip)) + g == std::abs(a(ip, ip)) &&
            std::abs(a(iq, iq)) + g == std::abs(a(iq, iq))) {
          a(ip, iq) = 0.0;
          a(iq, ip) = 0.0;
          continue;
        }
        if (apq == 0.0) continue;
        const double diff = a(iq, iq) - a(ip, ip);
        double t;
        if (std::abs(diff) + g == std::abs(diff)) {
          t = apq / diff;
        } else {
          const double theta = 0.5 * diff / apq;
          t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
          if (theta < 0.0) t = -t;
        }
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = t * c;
        const double tau = sn / (1.0 + c);
        const double h = t * apq;
        a(ip, ip) -= h;
        a(iq, iq) += h;
        a(ip, iq) = 0.0;
        a(iq, ip) = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (j == ip || j == iq) continue;
          const double gj = a(j, ip);
          const double hj = a(j, iq);
          const double np = gj - sn * (hj + gj * tau);
          const double nq = hj + sn * (gj - hj * tau);
          a(j, ip) = np;
          a(ip, j) = np;
          a(j, iq) = nq;
          a(iq, j) = nq;
        }
        for (std::size_t j = 0; j < n; ++j) {
          const double gj = v(j, ip);
          const double hj = v(j, iq);
          v(j, ip) = gj - sn * (hj + gj * tau);
          v(j, iq) = hj + sn * (gj - hj * tau);
        }
      }
    }
  }
  if (!converged && off_norm() > 1e-14 * scale) {
    throw NumericalError(fmt::format(
        "sym_eig: Jacobi did not converge in {} sweeps (off-diagonal norm {:.3e})", kMaxSweeps,
        off_norm()));
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });
  EigResult out{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

Matrix spd_inv_sqrt(const Matrix& s) {
  const EigResult e = sym_eig(s);
  const double wmax = e.values.back();
  const double wmin = e.values.front();
  if (!(wmax > 0.0) || wmin <= 1e-12 * wmax) {
    throw SingularityError(fmt::format(
        "spd_inv_sqrt: matrix is not positive definite to working precision "
        "(smallest eigenvalue {:.6e}, largest {:.6e})",
        wmin, wmax));
  }
  std::vector<double> d(e.values.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = 1.0 / std::sqrt(e.values[i]);
  return sym_part(matmul_nt(scale_columns(e.vectors, d), e.vectors));
}

SvdResult thin_svd(const Matrix& m) {
  require_finite(m, "thin_svd");
  const std::size_t n = m.rows();
  const std::size_t p = m.cols();
  if (n < p) {
    throw ContractViolation(fmt::format("thin_svd: need rows >= cols, got {}x{}", n, p));
  }
  const EigResult e = sym_eig(sym_part(matmul_tn(m, m)));

  SvdResult out{Matrix(n, p), std::vector<double>(p), Matrix(p, p)};
  for (std::size_t k = 0; k < p; ++k) {
    const std::size_t src = p - 1 - k;
    out.sigma[k] = std::sqrt(std::max(e.values[src], 0.0));
    for (std::size_t i = 0; i < p; ++i) out.v(i, k) = e.vectors(i, src);
  }
  const double cutoff = 1e-10 * out.sigma[0];
  const Matrix mv = matmul(m, out.v);

  // Left vectors as rows of ut; two Gram-Schmidt passes keep them orthonormal
  // even when m^T m squared the conditioning.
  Matrix ut(p, n);
  auto orthonormalize = [&](std::size_t k) {
    double* uk = ut.row(k).data();
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < k; ++j) {
        const double* uj = ut.row(j).data();
        axpy_tail(-dot_tail(uj, uk, 0, n), uj, uk, 0, n);
      }
    }
    const double nk = std::sqrt(dot_tail(uk, uk, 0, n));
    for (std::size_t i = 0; i < n; ++i) uk[i] /= nk;
    return nk;
  };

  std::size_t rank = 0;
  while (rank < p && out.sigma[rank] > cutoff && out.sigma[rank] > 0.0) ++rank;
  for (std::size_t k = 0; k < rank; ++k) {
    for (std::size_t i = 0; i < n; ++i) ut(k, i) = mv(i, k) / out.sigma[k];
    orthonormalize(k);
  }
  for (std::size_t k = rank; k < p; ++k) {
    out.sigma[k] = 0.0;
    // complete with the standard basis vector that survives projection best:
    // its residual is e_i minus the projection, with squared norm 1 - sum_j u_j[i]^2
    std::size_t best = 0;
    double best_res = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      double proj = 0.0;
      for (std::size_t j = 0; j < k; ++j) proj += ut(j, i) * ut(j, i);
      if (1.0 - proj > best_res) {
        best_res = 1.0 - proj;
        best = i;
      }
    }
    std::fill(ut.row(k).begin(), ut.row(k).end(), 0.0);
    ut(k, best) = 1.0;
    orthonormalize(k);
  }
  out.u = ut.transpose();
  return out;
}

}  // namespace landing
