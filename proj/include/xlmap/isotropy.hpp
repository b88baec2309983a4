#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "xlmap/linalg.hpp"

namespace xlmap {

inline constexpr int kDefaultInIterations = 5;
inline constexpr double kInConvergedMeanNorm = 1e-9;
inline constexpr std::size_t kDefaultAnisotropySample = 1000;

/// Replayable iterative normalization: the mean subtracted at each pass.
struct INTransform {
  std::size_t dim = 0;
  std::vector<std::vector<double>> means;

  std::size_t iterations() const noexcept { return means.size(); }

  /// A single zero mean; replaying it is plain unit normalization.
  static INTransform unit_only(std::size_t dim);

  bool operator==(const INTransform&) const = default;
};

/// Mean cosine similarity over all unordered pairs of min(sample_size, n)
/// columns drawn without replacement with the seeded generator.
double anisotropy_score(const EmbeddingMatrix& m, std::size_t sample_size, std::uint64_t seed);

struct InFit {
  INTransform transform;
  EmbeddingMatrix normalized;
  /// Norm of the mean found at each pass (before early stop zeros).
  std::vector<double> mean_norms;
};

/// Repeats (center, unit-normalize) for `iterations` passes. Stops early once
/// the mean norm falls below 1e-9; the remaining passes are recorded as zero
/// means so the transform always has `iterations` entries.
InFit fit_iterative_normalization(EmbeddingMatrix m, int iterations = kDefaultInIterations);

/// Replays a fitted transform on new columns.
EmbeddingMatrix apply_in(const INTransform& t, EmbeddingMatrix m);
void apply_in_place(const INTransform& t, std::span<double> x);

}  // namespace xlmap
