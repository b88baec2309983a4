#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xlmap/clustering.hpp"
#include "xlmap/corpus.hpp"
#include "xlmap/isotropy.hpp"
#include "xlmap/linalg.hpp"

namespace xlmap {

inline constexpr const char* kArtifactVersion = "1";

struct PipelineConfig {
  std::size_t cap = kDefaultCap;
  std::size_t min_count = 100;
  ClusteringConfig clustering;
  int in_iterations = kDefaultInIterations;
  bool use_in = true;
  bool lowercase = true;
  AnchorLevel level = AnchorLevel::Sense;
  Side target_side = Side::Left;
  std::uint64_t seed = 42;

  void validate() const;
};

/// The trained target -> source map and everything needed to replay it.
struct MappingArtifact {
  std::string version = kArtifactVersion;
  std::size_t dim = 0;
  AnchorLevel level = AnchorLevel::Sense;
  OrthogonalMap w;
  INTransform target_in;
  INTransform source_in;
  std::size_t anchor_count = 0;
  double residual = 0.0;
  PipelineConfig settings;
  std::vector<std::string> warnings;

  bool operator==(const MappingArtifact& other) const;
};

struct TrainResult {
  MappingArtifact artifact;
  AnchorPairSet anchors;
  EmbeddingMatrix target_anchors;  // X_s
  EmbeddingMatrix source_anchors;  // Y_s
  std::size_t types = 0;
  std::size_t stored_pairs = 0;
};

/// Columns sorted by (type, sense index), labelled "type@sense", unit length.
std::pair<EmbeddingMatrix, EmbeddingMatrix> build_anchor_matrices(const AnchorPairSet& anchors);

/// Runs IN (or plain unit normalization) over every stored vector, per side,
/// in place. Returns the (target, source) transforms.
std::pair<INTransform, INTransform> normalize_collection(TypeCollection& coll,
                                                         const PipelineConfig& cfg);

/// Everything after ingestion: normalization, anchors, Procrustes.
TrainResult train_from_collection(TypeCollection coll, const PipelineConfig& cfg);

TrainResult train(const std::string& target_corpus, const std::string& source_corpus,
                  const std::string& alignments, const PipelineConfig& cfg);

MappingArtifact train_mapping(const std::string& target_corpus, const std::string& source_corpus,
                              const std::string& alignments, const PipelineConfig& cfg);

/// W applied to the IN-replayed (or unit-normalized) target vector.
std::vector<double> transfer_vector(const MappingArtifact& artifact, std::span<const double> x);

/// The source-side counterpart: replays the source transform only.
std::vector<double> normalize_source_vector(const MappingArtifact& artifact,
                                            std::span<const double> y);

std::string serialize_artifact(const MappingArtifact& artifact);
MappingArtifact parse_artifact(const std::string& text, const std::string& where = "<memory>");
void save_artifact(const MappingArtifact& artifact, const std::string& path);
MappingArtifact load_artifact(const std::string& path);

}  // namespace xlmap
