#include "xlmap/eval.hpp"

#include <cmath>

#include "xlmap/error.hpp"
#include "xlmap/kernels.hpp"
#include "xlmap/parallel.hpp"

namespace xlmap {

double retrieval_precision(const EmbeddingMatrix& mapped_target, const EmbeddingMatrix& source,
                           const std::map<std::string, std::string>& truth, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  if (mapped_target.dim() != source.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "target and source anchors differ in dimension");
  }
  if (mapped_target.labels().size() != mapped_target.count() ||
      source.labels().size() != source.count()) {
    throw Error(ErrorCode::MissingLabel, "retrieval needs labelled matrices");
  }
  if (mapped_target.empty()) throw Error(ErrorCode::EmptyCollection, "no retrieval queries");

  std::map<std::string, std::size_t> source_index;
  for (std::size_t j = 0; j < source.count(); ++j) source_index.emplace(source.label(j), j);

  std::vector<std::size_t> correct(mapped_target.count());
  for (std::size_t i = 0; i < mapped_target.count(); ++i) {
    auto t = truth.find(mapped_target.label(i));
    if (t == truth.end()) {
      throw Error(ErrorCode::MissingLabel, "no truth entry for " + mapped_target.label(i));
    }
    auto s = source_index.find(t->second);
    if (s == source_index.end()) {
      throw Error(ErrorCode::MissingLabel, "truth label " + t->second + " is not a source column");
    }
    correct[i] = s->second;
  }

  const EmbeddingMatrix queries = unit_normalize_columns(mapped_target);
  const EmbeddingMatrix cands = unit_normalize_columns(source);

  std::vector<char> hit(queries.count(), 0);
  parallel_for(queries.count(), [&](std::size_t i) {
    const auto q = queries.column(i);
    const std::size_t c = correct[i];
    const double target_sim = kernels::dot(q, cands.column(c));
    const std::string& target_label = cands.label(c);
    std::size_t ahead = 0;
    for (std::size_t j = 0; j < cands.count() && ahead < k; ++j) {
      if (j == c) continue;
      const double sim = kernels::dot(q, cands.column(j));
      if (sim > target_sim || (sim == target_sim && cands.label(j) < target_label)) ++ahead;
    }
    hit[i] = ahead < k ? 1 : 0;
  });
  std::size_t hits = 0;
  for (char h : hit) hits += static_cast<std::size_t>(h);
  return static_cast<double>(hits) / static_cast<double>(queries.count());
}

RetrievalReport evaluate_retrieval(const MappingArtifact& artifact, const GroundTruth& truth) {
  if (truth.dim != artifact.dim) {
    throw Error(ErrorCode::DimensionMismatch, "ground truth and artifact differ in dimension");
  }
  EmbeddingMatrix mapped(artifact.dim, 0);
  for (const auto& [label, v] : truth.target_senses) {
    mapped.append_column(transfer_vector(artifact, v), label);
  }
  EmbeddingMatrix source(artifact.dim, 0);
  for (const auto& [label, v] : truth.source_senses) {
    source.append_column(normalize_source_vector(artifact, v), label);
  }
  RetrievalReport r;
  r.p_at_1 = retrieval_precision(mapped, source, truth.type_truth, 1);
  r.p_at_5 = retrieval_precision(mapped, source, truth.type_truth, 5);
  r.queries = mapped.count();
  r.candidates = source.count();
  return r;
}

double map_recovery_error(const OrthogonalMap& w, const GroundTruth& truth) {
  if (w.dim != truth.dim) {
    throw Error(ErrorCode::DimensionMismatch, "map and ground truth differ in dimension");
  }
  const std::size_t d = w.dim;
  double acc = 0.0;
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      const double diff = w(r, c) - truth.a[c * d + r];
      acc += diff * diff;
    }
  }
  return std::sqrt(acc) / std::sqrt(static_cast<double>(d));
}

}  // namespace xlmap
