#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "xlmap/error.hpp"
#include "xlmap/kernels.hpp"
#include "xlmap/linalg.hpp"

namespace xlmap {
namespace {

using ColSpan = std::span<double>;

ColSpan col(std::vector<double>& m, std::size_t dim, std::size_t j) {
  return {m.data() + j * dim, dim};
}

void rotate(ColSpan p, ColSpan q, double c, double s) {
  for (std::size_t r = 0; r < p.size(); ++r) {
    const double a = p[r];
    const double b = q[r];
    p[r] = c * a - s * b;
    q[r] = s * a + c * b;
  }
}

// Removes the components of v along columns [0, filled) of basis; two passes
// of modified Gram-Schmidt. Returns the norm of what is left.
double orthogonalize(std::span<double> v, const std::vector<double>& basis, std::size_t dim,
                     std::size_t filled) {
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t k = 0; k < filled; ++k) {
      const std::span<const double> b(basis.data() + k * dim, dim);
      kernels::axpy(-kernels::dot(b, v), b, v);
    }
  }
  return std::sqrt(kernels::sum_squares(v));
}

}  // namespace

Svd jacobi_svd(std::span<const double> a_in, std::size_t dim, JacobiOptions options) {
  if (a_in.size() != dim * dim) {
    throw Error(ErrorCode::DimensionMismatch, "SVD input is not square");
  }
  for (double x : a_in) {
    if (!std::isfinite(x)) throw Error(ErrorCode::SvdFailure, "non-finite entry in SVD input");
  }

  std::vector<double> a(a_in.begin(), a_in.end());
  std::vector<double> v(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) v[i * dim + i] = 1.0;

  constexpr double tiny = std::numeric_limits<double>::min();
  int sweep = 0;
  bool converged = dim < 2;
  while (!converged && sweep < options.max_sweeps) {
    ++sweep;
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < dim; ++p) {
      for (std::size_t q = p + 1; q < dim; ++q) {
        auto ap = col(a, dim, p);
        auto aq = col(a, dim, q);
        const double alpha = kernels::sum_squares(ap);
        const double beta = kernels::sum_squares(aq);
        const double gamma = kernels::dot(ap, aq);
        if (std::abs(gamma) <= options.tolerance * std::sqrt(alpha * beta) ||
            std::abs(gamma) < tiny) {
          continue;
        }
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        rotate(ap, aq, c, s);
        rotate(col(v, dim, p), col(v, dim, q), c, s);
      }
    }
    converged = !rotated;
  }
  if (!converged) {
    throw Error(ErrorCode::SvdFailure,
                "Jacobi SVD did not converge in " + std::to_string(options.max_sweeps) + " sweeps");
  }

  std::vector<double> sigma(dim);
  for (std::size_t j = 0; j < dim; ++j) sigma[j] = std::sqrt(kernels::sum_squares(col(a, dim, j)));

  std::vector<std::size_t> order(dim);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return sigma[l] > sigma[r]; });

  Svd out;
  out.dim = dim;
  out.sweeps = sweep;
  out.u.assign(dim * dim, 0.0);
  out.v.assign(dim * dim, 0.0);
  out.singular_values.resize(dim);

  const double sigma_max = dim ? sigma[order[0]] : 0.0;
  std::vector<std::size_t> deferred;
  // Well-conditioned directions first, in descending order.
  std::vector<std::size_t> slot_of(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    const std::size_t j = order[k];
    out.singular_values[k] = sigma[j];
    std::copy_n(v.begin() + j * dim, dim, out.v.begin() + k * dim);
    slot_of[k] = j;
  }
  for (std::size_t k = 0; k < dim; ++k) {
    const std::size_t j = slot_of[k];
    auto uk = col(out.u, dim, k);
    bool ok = false;
    if (sigma[j] > sigma_max * 1e-13 && sigma[j] > tiny) {
      std::copy_n(a.begin() + j * dim, dim, uk.begin());
      kernels::scale(1.0 / sigma[j], uk);
      // Only columns before k are final at this point.
      const double norm = orthogonalize(uk, out.u, dim, k);
      if (norm > 0.5) {
        kernels::scale(1.0 / norm, uk);
        ok = true;
      }
    }
    if (!ok) {
      std::fill(uk.begin(), uk.end(), 0.0);
      deferred.push_back(k);
    }
  }

  // Null-space directions: complete the basis, preferring the matching right
  // singular vector so that symmetric inputs give U = V.
  for (std::size_t k : deferred) {
    auto uk = col(out.u, dim, k);
    bool ok = false;
    std::vector<double> scratch(dim);
    for (std::size_t cand = 0; cand <= dim && !ok; ++cand) {
      if (cand == 0) {
        std::copy_n(out.v.begin() + k * dim, dim, scratch.begin());
      } else {
        std::fill(scratch.begin(), scratch.end(), 0.0);
        scratch[cand - 1] = 1.0;
      }
      // Project out every already-final column of U (all but deferred ones
      // not yet filled, which are zero and contribute nothing).
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t m = 0; m < dim; ++m) {
          if (m == k) continue;
          const std::span<const double> b(out.u.data() + m * dim, dim);
          kernels::axpy(-kernels::dot(b, scratch), b, scratch);
        }
      }
      const double norm = std::sqrt(kernels::sum_squares(scratch));
      if (norm > 0.5) {
        kernels::scale(1.0 / norm, scratch);
        std::copy(scratch.begin(), scratch.end(), uk.begin());
        ok = true;
      }
    }
    if (!ok) throw Error(ErrorCode::SvdFailure, "could not complete the left singular basis");
  }

  for (std::size_t k = 0; k < dim; ++k) {
    auto uk = col(out.u, dim, k);
    std::size_t arg = 0;
    for (std::size_t r = 1; r < dim; ++r) {
      if (std::abs(uk[r]) > std::abs(uk[arg])) arg = r;
    }
    if (uk[arg] < 0.0) {
      kernels::scale(-1.0, uk);
      kernels::scale(-1.0, col(out.v, dim, k));
    }
  }
  return out;
}

}  // namespace xlmap
