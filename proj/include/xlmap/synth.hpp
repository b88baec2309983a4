#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "xlmap/linalg.hpp"

namespace xlmap {

struct SynthConfig {
  std::size_t dim = 32;
  std::size_t n_types = 500;
  std::size_t n_sentences = 2000;
  std::size_t sentence_len = 10;
  /// Probability of a target type having 1, 2, ... senses.
  std::vector<double> senses_per_type = {0.8, 0.2};
  double noise_sigma = 0.01;
  /// Norm of a shared offset added to every vector of a side (each side gets
  /// its own random direction).
  double anisotropy_offset_norm = 0.0;
  /// Norm of a per-sense offset added on the target side only.
  double sense_offset_norm = 0.0;
  std::uint64_t seed = 42;

  void validate() const;
};

/// Known answer behind a synthetic bundle.
struct GroundTruth {
  std::size_t dim = 0;
  /// Orthogonal source -> target map, row-major.
  std::vector<double> a;
  /// Target sense label "tN@s" -> source type label "sM".
  std::map<std::string, std::string> type_truth;
  /// Clean (noise-free) vectors per label.
  std::map<std::string, std::vector<double>> target_senses;
  std::map<std::string, std::vector<double>> source_senses;

  OrthogonalMap a_map() const;
  EmbeddingMatrix target_matrix() const;
  EmbeddingMatrix source_matrix() const;
};

struct SynthBundle {
  std::string target_corpus;
  std::string source_corpus;
  std::string alignments;
  std::string truth;
};

/// Writes <prefix>.target.tec.jsonl, <prefix>.source.tec.jsonl,
/// <prefix>.align and <prefix>.truth.json.
SynthBundle generate_synthetic(const SynthConfig& cfg, const std::string& prefix);

void save_ground_truth(const GroundTruth& truth, const std::string& path);
GroundTruth load_ground_truth(const std::string& path);

/// Haar-ish random orthogonal matrix (Gram-Schmidt of a Gaussian), row-major.
std::vector<double> random_orthogonal(std::size_t dim, std::uint64_t seed);

}  // namespace xlmap
