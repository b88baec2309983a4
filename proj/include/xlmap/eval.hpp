#pragma once

#include <map>
#include <string>

#include "xlmap/linalg.hpp"
#include "xlmap/pipeline.hpp"
#include "xlmap/synth.hpp"

namespace xlmap {

/// Fraction of target columns whose correct source label is among the k
/// most cosine-similar source columns (ties broken by label).
double retrieval_precision(const EmbeddingMatrix& mapped_target, const EmbeddingMatrix& source,
                           const std::map<std::string, std::string>& truth, std::size_t k);

struct RetrievalReport {
  double p_at_1 = 0.0;
  double p_at_5 = 0.0;
  std::size_t queries = 0;
  std::size_t candidates = 0;
};

/// Maps every clean target sense vector of `truth` through the artifact and
/// retrieves among the source sense vectors normalized the same way.
RetrievalReport evaluate_retrieval(const MappingArtifact& artifact, const GroundTruth& truth);

/// ||W - A^T||_F / sqrt(d): distance of a learned target->source map from the
/// inverse of the planted source->target map.
double map_recovery_error(const OrthogonalMap& w, const GroundTruth& truth);

}  // namespace xlmap
