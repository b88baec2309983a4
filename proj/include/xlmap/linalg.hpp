#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace xlmap {

/// Columns with a Euclidean norm below this are treated as degenerate.
inline constexpr double kDegenerateNorm = 1e-12;

/// Dense d x n matrix of column vectors with optional per-column labels.
/// Storage is column-major so each embedding is one contiguous span.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t dim, std::size_t count);
  EmbeddingMatrix(std::size_t dim, std::size_t count, std::vector<double> values,
                  std::vector<std::string> labels = {});

  /// Promotes 32-bit input to 64-bit storage.
  static EmbeddingMatrix from_floats(std::size_t dim, std::size_t count,
                                     std::span<const float> values);
  static EmbeddingMatrix from_columns(const std::vector<std::vector<double>>& columns,
                                      std::vector<std::string> labels = {});

  std::size_t dim() const noexcept { return dim_; }
  std::size_t count() const noexcept { return count_; }
  bool empty() const noexcept { return count_ == 0; }

  std::span<const double> column(std::size_t j) const {
    return {values_.data() + j * dim_, dim_};
  }
  std::span<double> column(std::size_t j) { return {values_.data() + j * dim_, dim_}; }

  double operator()(std::size_t row, std::size_t col) const { return values_[col * dim_ + row]; }
  double& operator()(std::size_t row, std::size_t col) { return values_[col * dim_ + row]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  bool has_labels() const noexcept { return !labels_.empty() || count_ == 0; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::string& label(std::size_t j) const { return labels_.at(j); }
  void set_labels(std::vector<std::string> labels);

  void reserve(std::size_t columns) { values_.reserve(columns * dim_); }
  /// Appends a column; label must be given iff the matrix is labelled.
  void append_column(std::span<const double> v, std::optional<std::string> label = std::nullopt);

  /// Throws FormatError naming the first non-finite entry.
  void check_finite() const;

  bool operator==(const EmbeddingMatrix&) const = default;

 private:
  std::size_t dim_ = 0;
  std::size_t count_ = 0;
  std::vector<double> values_;
  std::vector<std::string> labels_;
};

/// Square orthogonal map W stored row-major, with the contract y ~= W x.
struct OrthogonalMap {
  std::size_t dim = 0;
  std::vector<double> values;  // dim * dim, row-major
  double residual = 0.0;       // ||W X - Y||_F on the anchors it was fit to

  double operator()(std::size_t row, std::size_t col) const { return values[row * dim + col]; }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * dim, dim}; }

  static OrthogonalMap identity(std::size_t dim);
};

/// Singular value decomposition A = U diag(s) V^T of a square matrix.
/// U and V are column-major; singular values are sorted descending and each
/// left singular vector has its largest-magnitude entry positive.
struct Svd {
  std::size_t dim = 0;
  std::vector<double> u;
  std::vector<double> singular_values;
  std::vector<double> v;
  int sweeps = 0;
};

struct JacobiOptions {
  double tolerance = 1e-12;
  int max_sweeps = 100;
};

/// One-sided (Hestenes) Jacobi SVD of a column-major dim x dim matrix.
/// Throws SvdFailure if the off-diagonal mass does not drop below
/// `tolerance` within `max_sweeps` sweeps.
Svd jacobi_svd(std::span<const double> a, std::size_t dim, JacobiOptions options = {});

double frobenius_norm(const EmbeddingMatrix& m);

EmbeddingMatrix unit_normalize_columns(EmbeddingMatrix m);

/// In-place unit normalization of one vector; throws DegenerateVector.
void normalize_in_place(std::span<double> v);

/// Elementwise a - b; labels taken from a.
EmbeddingMatrix subtract(const EmbeddingMatrix& a, const EmbeddingMatrix& b);

/// Cross-covariance Y X^T (column-major dim x dim).
std::vector<double> cross_covariance(const EmbeddingMatrix& y, const EmbeddingMatrix& x);

/// argmin over orthogonal W of ||W X - Y||_F, W = U V^T with U S V^T = svd(Y X^T).
/// Reflections are allowed.
OrthogonalMap solve_procrustes(const EmbeddingMatrix& x, const EmbeddingMatrix& y,
                               JacobiOptions options = {});

EmbeddingMatrix apply_map(const OrthogonalMap& w, const EmbeddingMatrix& x);
std::vector<double> apply_map(const OrthogonalMap& w, std::span<const double> x);

/// max |(W^T W - I)_{ij}|
double orthogonality_error(const OrthogonalMap& w);

}  // namespace xlmap
