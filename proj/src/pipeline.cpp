#include "xlmap/pipeline.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "xlmap/error.hpp"

namespace xlmap {

void PipelineConfig::validate() const {
  if (cap == 0 || in_iterations <= 0) {
    throw Error(ErrorCode::InvalidArgument, "cap and IN iterations must be positive");
  }
  clustering.validate();
}

bool MappingArtifact::operator==(const MappingArtifact& o) const {
  const auto& a = settings;
  const auto& b = o.settings;
  const bool same_settings =
      a.cap == b.cap && a.min_count == b.min_count && a.in_iterations == b.in_iterations &&
      a.use_in == b.use_in && a.lowercase == b.lowercase && a.level == b.level &&
      a.target_side == b.target_side && a.seed == b.seed &&
      a.clustering.k_min == b.clustering.k_min && a.clustering.k_max == b.clustering.k_max &&
      a.clustering.max_iters == b.clustering.max_iters &&
      a.clustering.rel_tol == b.clustering.rel_tol &&
      a.clustering.seed == b.clustering.seed &&
      a.clustering.min_cluster_size == b.clustering.min_cluster_size &&
      a.clustering.min_count == b.clustering.min_count;
  return same_settings && version == o.version && dim == o.dim && level == o.level &&
         w.dim == o.w.dim && w.values == o.w.values && w.residual == o.w.residual &&
         target_in == o.target_in && source_in == o.source_in && anchor_count == o.anchor_count &&
         residual == o.residual && warnings == o.warnings;
}

std::pair<EmbeddingMatrix, EmbeddingMatrix> build_anchor_matrices(const AnchorPairSet& anchors) {
  if (anchors.entries.empty()) throw Error(ErrorCode::EmptyCollection, "no anchors to stack");
  std::vector<std::size_t> order(anchors.entries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    const auto& a = anchors.entries[l];
    const auto& b = anchors.entries[r];
    if (a.type != b.type) return a.type < b.type;
    return a.sense_index < b.sense_index;
  });
  const std::size_t dim = anchors.entries.front().target_anchor.size();
  EmbeddingMatrix x(dim, 0);
  EmbeddingMatrix y(dim, 0);
  x.reserve(order.size());
  y.reserve(order.size());
  for (std::size_t i : order) {
    const auto& e = anchors.entries[i];
    if (e.target_anchor.size() != dim || e.source_anchor.size() != dim) {
      throw Error(ErrorCode::DimensionMismatch, "anchor " + e.type + " has the wrong dimension");
    }
    std::string label = e.type + "@" + std::to_string(e.sense_index);
    x.append_column(e.target_anchor, label);
    y.append_column(e.source_anchor, std::move(label));
  }
  return {unit_normalize_columns(std::move(x)), unit_normalize_columns(std::move(y))};
}

namespace {

enum class Which { Target, Source };

EmbeddingMatrix gather(const TypeCollection& coll, Which side) {
  EmbeddingMatrix m(coll.dim(), 0);
  m.reserve(coll.stored_pairs());
  for (const auto& [_, pairs] : coll.types()) {
    const auto& v = side == Which::Target ? pairs.target : pairs.source;
    for (std::size_t i = 0; i < pairs.stored; ++i) {
      m.append_column(std::span<const double>(v.data() + i * coll.dim(), coll.dim()));
    }
  }
  return m;
}

void scatter(TypeCollection& coll, Which side, const EmbeddingMatrix& m) {
  std::size_t col = 0;
  const auto vals = m.values();
  for (auto& [_, pairs] : coll.mutable_types()) {
    auto& v = side == Which::Target ? pairs.target : pairs.source;
    const std::size_t len = pairs.stored * coll.dim();
    std::copy_n(vals.begin() + static_cast<std::ptrdiff_t>(col * coll.dim()), len, v.begin());
    col += pairs.stored;
  }
}

}  // namespace

std::pair<INTransform, INTransform> normalize_collection(TypeCollection& coll,
                                                         const PipelineConfig& cfg) {
  std::pair<INTransform, INTransform> out;
  for (Which side : {Which::Target, Which::Source}) {
    EmbeddingMatrix pop = gather(coll, side);
    INTransform t;
    if (cfg.use_in) {
      InFit fit = fit_iterative_normalization(std::move(pop), cfg.in_iterations);
      t = std::move(fit.transform);
      pop = std::move(fit.normalized);
    } else {
      pop = unit_normalize_columns(std::move(pop));
      t = INTransform::unit_only(coll.dim());
    }
    scatter(coll, side, pop);
    (side == Which::Target ? out.first : out.second) = std::move(t);
  }
  return out;
}

TrainResult train_from_collection(TypeCollection coll, const PipelineConfig& cfg) {
  cfg.validate();
  if (coll.empty()) throw Error(ErrorCode::EmptyCollection, "no aligned type pairs were collected");

  TrainResult res;
  res.types = coll.size();
  res.stored_pairs = coll.stored_pairs();

  auto [target_in, source_in] = normalize_collection(coll, cfg);

  ClusteringConfig ccfg = cfg.clustering;
  ccfg.min_count = cfg.min_count;
  ccfg.seed = cfg.seed;
  res.anchors = derive_sense_anchors(coll, ccfg, cfg.level);
  std::tie(res.target_anchors, res.source_anchors) = build_anchor_matrices(res.anchors);

  MappingArtifact& art = res.artifact;
  art.dim = coll.dim();
  art.level = cfg.level;
  art.w = solve_procrustes(res.target_anchors, res.source_anchors);
  art.target_in = std::move(target_in);
  art.source_in = std::move(source_in);
  art.anchor_count = res.target_anchors.count();
  art.residual = art.w.residual;
  art.settings = cfg;
  art.settings.clustering = ccfg;
  if (art.anchor_count < art.dim) {
    art.warnings.push_back("InsufficientAnchors: " + std::to_string(art.anchor_count) +
                           " anchors for dimension " + std::to_string(art.dim) +
                           "; the map is underdetermined");
  }
  return res;
}

TrainResult train(const std::string& target_corpus, const std::string& source_corpus,
                  const std::string& alignments, const PipelineConfig& cfg) {
  cfg.validate();
  CorpusReader target(target_corpus);
  CorpusReader source(source_corpus);
  AlignmentReader links(alignments);
  CollectOptions opts;
  opts.cap = cfg.cap;
  opts.lowercase = cfg.lowercase;
  opts.target_side = cfg.target_side;
  return train_from_collection(collect_type_pairs(target, source, links, opts), cfg);
}

MappingArtifact train_mapping(const std::string& target_corpus, const std::string& source_corpus,
                              const std::string& alignments, const PipelineConfig& cfg) {
  return train(target_corpus, source_corpus, alignments, cfg).artifact;
}

std::vector<double> transfer_vector(const MappingArtifact& artifact, std::span<const double> x) {
  if (x.size() != artifact.dim) {
    throw Error(ErrorCode::DimensionMismatch, "vector of length " + std::to_string(x.size()) +
                                                  " for an artifact of dimension " +
                                                  std::to_string(artifact.dim));
  }
  std::vector<double> v(x.begin(), x.end());
  apply_in_place(artifact.target_in, v);
  return apply_map(artifact.w, v);
}

std::vector<double> normalize_source_vector(const MappingArtifact& artifact,
                                            std::span<const double> y) {
  if (y.size() != artifact.dim) {
    throw Error(ErrorCode::DimensionMismatch, "vector of length " + std::to_string(y.size()) +
                                                  " for an artifact of dimension " +
                                                  std::to_string(artifact.dim));
  }
  std::vector<double> v(y.begin(), y.end());
  apply_in_place(artifact.source_in, v);
  return v;
}

}  // namespace xlmap
