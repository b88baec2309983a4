#include "xlmap/linalg.hpp"

#include <cmath>
#include <string>

#include "xlmap/error.hpp"
#include "xlmap/kernels.hpp"

namespace xlmap {

EmbeddingMatrix::EmbeddingMatrix(std::size_t dim, std::size_t count)
    : dim_(dim), count_(count), values_(dim * count, 0.0) {}

EmbeddingMatrix::EmbeddingMatrix(std::size_t dim, std::size_t count, std::vector<double> values,
                                 std::vector<std::string> labels)
    : dim_(dim), count_(count), values_(std::move(values)), labels_(std::move(labels)) {
  if (values_.size() != dim_ * count_) {
    throw Error(ErrorCode::DimensionMismatch,
                "matrix storage holds " + std::to_string(values_.size()) + " values, expected " +
                    std::to_string(dim_) + " x " + std::to_string(count_));
  }
  if (!labels_.empty() && labels_.size() != count_) {
    throw Error(ErrorCode::DimensionMismatch, "label count " + std::to_string(labels_.size()) +
                                                  " does not match column count " +
                                                  std::to_string(count_));
  }
  check_finite();
}

EmbeddingMatrix EmbeddingMatrix::from_floats(std::size_t dim, std::size_t count,
                                             std::span<const float> values) {
  return EmbeddingMatrix(dim, count, std::vector<double>(values.begin(), values.end()));
}

EmbeddingMatrix EmbeddingMatrix::from_columns(const std::vector<std::vector<double>>& columns,
                                              std::vector<std::string> labels) {
  if (columns.empty()) return EmbeddingMatrix(0, 0, {}, std::move(labels));
  const std::size_t dim = columns.front().size();
  std::vector<double> values;
  values.reserve(dim * columns.size());
  for (const auto& c : columns) {
    if (c.size() != dim) {
      throw Error(ErrorCode::DimensionMismatch, "column of length " + std::to_string(c.size()) +
                                                    " in a matrix of dimension " +
                                                    std::to_string(dim));
    }
    values.insert(values.end(), c.begin(), c.end());
  }
  return EmbeddingMatrix(dim, columns.size(), std::move(values), std::move(labels));
}

void EmbeddingMatrix::set_labels(std::vector<std::string> labels) {
  if (!labels.empty() && labels.size() != count_) {
    throw Error(ErrorCode::DimensionMismatch, "label count does not match column count");
  }
  labels_ = std::move(labels);
}

void EmbeddingMatrix::append_column(std::span<const double> v, std::optional<std::string> label) {
  if (v.size() != dim_) {
    throw Error(ErrorCode::DimensionMismatch, "appending a column of length " +
                                                  std::to_string(v.size()) + " to dimension " +
                                                  std::to_string(dim_));
  }
  const bool labelled = !labels_.empty() || (count_ == 0 && label.has_value());
  if (labelled != label.has_value()) {
    throw Error(ErrorCode::InvalidArgument, "column label required iff matrix is labelled");
  }
  values_.insert(values_.end(), v.begin(), v.end());
  if (label) labels_.push_back(std::move(*label));
  ++count_;
}

void EmbeddingMatrix::check_finite() const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw Error(ErrorCode::FormatError, "non-finite entry at row " + std::to_string(i % dim_) +
                                              ", column " + std::to_string(i / dim_));
    }
  }
}

OrthogonalMap OrthogonalMap::identity(std::size_t dim) {
  OrthogonalMap w{dim, std::vector<double>(dim * dim, 0.0), 0.0};
  for (std::size_t i = 0; i < dim; ++i) w.values[i * dim + i] = 1.0;
  return w;
}

double frobenius_norm(const EmbeddingMatrix& m) {
  return std::sqrt(kernels::sum_squares(m.values()));
}

void normalize_in_place(std::span<double> v) {
  const double norm = std::sqrt(kernels::sum_squares(v));
  if (!(norm >= kDegenerateNorm)) {
    throw Error(ErrorCode::DegenerateVector,
                "vector norm " + std::to_string(norm) + " is below " + std::to_string(kDegenerateNorm));
  }
  kernels::scale(1.0 / norm, v);
}

EmbeddingMatrix unit_normalize_columns(EmbeddingMatrix m) {
  for (std::size_t j = 0; j < m.count(); ++j) {
    try {
      normalize_in_place(m.column(j));
    } catch (const Error& e) {
      throw Error(ErrorCode::DegenerateVector, "column " + std::to_string(j) + " has zero norm");
    }
  }
  return m;
}

EmbeddingMatrix subtract(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
  if (a.dim() != b.dim() || a.count() != b.count()) {
    throw Error(ErrorCode::DimensionMismatch, "cannot subtract matrices of different shapes");
  }
  EmbeddingMatrix out = a;
  kernels::axpy(-1.0, b.values(), out.values());
  return out;
}

std::vector<double> cross_covariance(const EmbeddingMatrix& y, const EmbeddingMatrix& x) {
  const std::size_t d = x.dim();
  std::vector<double> m(d * d, 0.0);
  for (std::size_t j = 0; j < x.count(); ++j) {
    const auto xj = x.column(j);
    const auto yj = y.column(j);
    for (std::size_t c = 0; c < d; ++c) {
      kernels::axpy(xj[c], yj, std::span<double>(m.data() + c * d, d));
    }
  }
  return m;
}

OrthogonalMap solve_procrustes(const EmbeddingMatrix& x, const EmbeddingMatrix& y,
                               JacobiOptions options) {
  if (x.dim() != y.dim() || x.count() != y.count()) {
    throw Error(ErrorCode::DimensionMismatch,
                "anchor matrices are " + std::to_string(x.dim()) + "x" + std::to_string(x.count()) +
                    " and " + std::to_string(y.dim()) + "x" + std::to_string(y.count()));
  }
  const std::size_t d = x.dim();
  if (d == 0) throw Error(ErrorCode::InvalidArgument, "dimension must be positive");

  const Svd svd = jacobi_svd(cross_covariance(y, x), d, options);

  OrthogonalMap w{d, std::vector<double>(d * d, 0.0), 0.0};
  for (std::size_t i = 0; i < d; ++i) {
    const std::span<const double> vi(svd.v.data() + i * d, d);
    for (std::size_t r = 0; r < d; ++r) {
      kernels::axpy(svd.u[i * d + r], vi, std::span<double>(w.values.data() + r * d, d));
    }
  }
  w.residual = frobenius_norm(subtract(apply_map(w, x), y));
  return w;
}

std::vector<double> apply_map(const OrthogonalMap& w, std::span<const double> x) {
  if (x.size() != w.dim) {
    throw Error(ErrorCode::DimensionMismatch, "vector of length " + std::to_string(x.size()) +
                                                  " for a map of dimension " +
                                                  std::to_string(w.dim));
  }
  std::vector<double> out(w.dim);
  for (std::size_t r = 0; r < w.dim; ++r) out[r] = kernels::dot(w.row(r), x);
  return out;
}

EmbeddingMatrix apply_map(const OrthogonalMap& w, const EmbeddingMatrix& x) {
  if (x.dim() != w.dim) {
    throw Error(ErrorCode::DimensionMismatch, "matrix of dimension " + std::to_string(x.dim()) +
                                                  " for a map of dimension " +
                                                  std::to_string(w.dim));
  }
  EmbeddingMatrix out(x.dim(), x.count());
  for (std::size_t j = 0; j < x.count(); ++j) {
    const auto xj = x.column(j);
    auto oj = out.column(j);
    for (std::size_t r = 0; r < w.dim; ++r) oj[r] = kernels::dot(w.row(r), xj);
  }
  out.set_labels(x.labels());
  return out;
}

double orthogonality_error(const OrthogonalMap& w) {
  const std::size_t d = w.dim;
  // Columns of W become contiguous rows of the transpose.
  std::vector<double> wt(d * d);
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d; ++c) wt[c * d + r] = w.values[r * d + c];
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const std::span<const double> ci(wt.data() + i * d, d);
    for (std::size_t j = i; j < d; ++j) {
      const double g = kernels::dot(ci, std::span<const double>(wt.data() + j * d, d));
      worst = std::max(worst, std::abs(g - (i == j ? 1.0 : 0.0)));
    }
  }
  return worst;
}

}  // namespace xlmap
