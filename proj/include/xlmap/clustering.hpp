#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xlmap/corpus.hpp"
#include "xlmap/linalg.hpp"

namespace xlmap {

struct ClusteringConfig {
  std::size_t k_min = 1;
  std::size_t k_max = 10;
  int max_iters = 100;
  double rel_tol = 1e-6;  // relative WCSS improvement that ends Lloyd iterations
  std::uint64_t seed = 42;
  std::size_t min_cluster_size = 5;
  std::size_t min_count = 100;  // types must be observed more often than this to be split

  void validate() const;
};

struct KMeansResult {
  std::vector<std::size_t> assignments;
  EmbeddingMatrix centroids;
  double wcss = 0.0;
  /// WCSS after each assignment step, plus the final value; non-increasing.
  std::vector<double> history;
};

/// Lloyd's algorithm from a k-means++ start. `data` holds n vectors of
/// length `dim` back to back. Deterministic for a fixed cfg.seed.
KMeansResult kmeans(std::span<const double> data, std::size_t dim, std::size_t k,
                    const ClusteringConfig& cfg);
KMeansResult kmeans(const EmbeddingMatrix& vectors, std::size_t k, const ClusteringConfig& cfg);

/// Normalized-difference knee of a WCSS-vs-k curve over consecutive k.
std::size_t select_k_elbow(std::span<const std::pair<std::size_t, double>> curve);

enum class AnchorLevel { Word, Sense };

std::string_view to_string(AnchorLevel level);
AnchorLevel parse_level(std::string_view s);

struct AnchorEntry {
  std::string type;
  std::size_t sense_index = 0;
  std::vector<double> target_anchor;
  std::vector<double> source_anchor;
  std::size_t support = 0;
};

struct AnchorPairSet {
  std::size_t dim = 0;
  /// Ordered by (type, sense_index).
  std::vector<AnchorEntry> entries;
  /// k picked by the elbow rule for every type that was clustered.
  std::map<std::string, std::size_t> selected_k;

  std::size_t senses_of(std::string_view type) const;
};

/// Word level: one mean pair per type. Sense level: frequent types are
/// clustered on the target side and the source side is split by the same
/// partition; rare types fall back to one mean pair.
AnchorPairSet derive_sense_anchors(const TypeCollection& coll, const ClusteringConfig& cfg,
                                   AnchorLevel level);

}  // namespace xlmap
