#include "xlmap/isotropy.hpp"

#include <cmath>
#include <string>

#include "xlmap/error.hpp"
#include "xlmap/kernels.hpp"
#include "xlmap/parallel.hpp"
#include "xlmap/random.hpp"

namespace xlmap {
namespace {

// Rows per reduction block. Fixed so the summation tree does not depend on
// the number of workers.
constexpr std::size_t kPairBlockRows = 32;

std::vector<double> column_mean(const EmbeddingMatrix& m) {
  std::vector<double> mean(m.dim(), 0.0);
  for (std::size_t j = 0; j < m.count(); ++j) kernels::axpy(1.0, m.column(j), mean);
  kernels::scale(1.0 / static_cast<double>(m.count()), mean);
  return mean;
}

void center_and_normalize(EmbeddingMatrix& m, std::span<const double> mean) {
  for (std::size_t j = 0; j < m.count(); ++j) {
    auto c = m.column(j);
    kernels::axpy(-1.0, mean, c);
    const double norm = std::sqrt(kernels::sum_squares(c));
    if (!(norm >= kDegenerateNorm)) {
      throw Error(ErrorCode::DegenerateVector,
                  "column " + std::to_string(j) + " vanishes after centering");
    }
    kernels::scale(1.0 / norm, c);
  }
}

}  // namespace

INTransform INTransform::unit_only(std::size_t dim) {
  return INTransform{dim, {std::vector<double>(dim, 0.0)}};
}

double anisotropy_score(const EmbeddingMatrix& m, std::size_t sample_size, std::uint64_t seed) {
  if (m.count() < 2) {
    throw Error(ErrorCode::InsufficientVectors,
                "anisotropy needs at least 2 vectors, got " + std::to_string(m.count()));
  }
  if (sample_size < 2) throw Error(ErrorCode::InvalidArgument, "sample size must be at least 2");

  std::vector<std::size_t> picked;
  if (sample_size >= m.count()) {
    picked.resize(m.count());
    for (std::size_t j = 0; j < m.count(); ++j) picked[j] = j;
  } else {
    Rng rng(seed);
    picked = sample_without_replacement(m.count(), sample_size, rng);
  }

  EmbeddingMatrix unit(m.dim(), 0);
  unit.reserve(picked.size());
  for (std::size_t j : picked) unit.append_column(m.column(j));
  try {
    unit = unit_normalize_columns(std::move(unit));
  } catch (const Error&) {
    throw Error(ErrorCode::DegenerateVector, "zero-norm vector in anisotropy sample");
  }

  const std::size_t n = unit.count();
  const std::size_t blocks = (n + kPairBlockRows - 1) / kPairBlockRows;
  std::vector<double> partial(blocks, 0.0);
  parallel_for(blocks, [&](std::size_t b) {
    const std::size_t begin = b * kPairBlockRows;
    const std::size_t end = std::min(n, begin + kPairBlockRows);
    double acc = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const auto ci = unit.column(i);
      for (std::size_t j = i + 1; j < n; ++j) acc += kernels::dot(ci, unit.column(j));
    }
    partial[b] = acc;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  return total / pairs;
}

InFit fit_iterative_normalization(EmbeddingMatrix m, int iterations) {
  if (iterations < 1) throw Error(ErrorCode::InvalidArgument, "iterations must be positive");
  if (m.count() < 2) {
    throw Error(ErrorCode::InsufficientVectors,
                "iterative normalization needs at least 2 vectors, got " +
                    std::to_string(m.count()));
  }
  InFit fit;
  fit.transform.dim = m.dim();
  bool converged = false;
  for (int t = 0; t < iterations; ++t) {
    if (converged) {
      fit.transform.means.emplace_back(m.dim(), 0.0);
      fit.mean_norms.push_back(0.0);
      continue;
    }
    std::vector<double> mean = column_mean(m);
    const double norm = std::sqrt(kernels::sum_squares(mean));
    fit.mean_norms.push_back(norm);
    if (norm < kInConvergedMeanNorm) {
      std::fill(mean.begin(), mean.end(), 0.0);
      converged = true;
    }
    center_and_normalize(m, mean);
    fit.transform.means.push_back(std::move(mean));
  }
  fit.normalized = std::move(m);
  return fit;
}

void apply_in_place(const INTransform& t, std::span<double> x) {
  if (x.size() != t.dim) {
    throw Error(ErrorCode::DimensionMismatch, "vector of length " + std::to_string(x.size()) +
                                                  " for a transform of dimension " +
                                                  std::to_string(t.dim));
  }
  for (const auto& mean : t.means) {
    kernels::axpy(-1.0, mean, x);
    normalize_in_place(x);
  }
}

EmbeddingMatrix apply_in(const INTransform& t, EmbeddingMatrix m) {
  if (m.dim() != t.dim) {
    throw Error(ErrorCode::DimensionMismatch, "matrix of dimension " + std::to_string(m.dim()) +
                                                  " for a transform of dimension " +
                                                  std::to_string(t.dim));
  }
  for (std::size_t j = 0; j < m.count(); ++j) {
    try {
      apply_in_place(t, m.column(j));
    } catch (const Error& e) {
      throw Error(e.code(), "column " + std::to_string(j) + ": " + e.what());
    }
  }
  return m;
}

}  // namespace xlmap
