#include "xlmap/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "xlmap/error.hpp"
#include "xlmap/kernels.hpp"
#include "xlmap/parallel.hpp"
#include "xlmap/random.hpp"

namespace xlmap {
namespace {

struct Points {
  std::span<const double> data;
  std::size_t dim;
  std::size_t size() const { return dim ? data.size() / dim : 0; }
  std::span<const double> operator[](std::size_t i) const { return data.subspan(i * dim, dim); }
};

std::vector<std::size_t> kmeanspp_seeds(const Points& pts, std::size_t k, Rng& rng) {
  const std::size_t n = pts.size();
  std::vector<std::size_t> chosen;
  std::vector<bool> taken(n, false);
  chosen.push_back(static_cast<std::size_t>(rng.below(n)));
  taken[chosen.back()] = true;
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = kernels::squared_distance(pts[i], pts[chosen[0]]);

  while (chosen.size() < k) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = n;
    if (total > 0.0) {
      const double r = rng.uniform() * total;
      double cum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        cum += d2[i];
        if (cum > r && !taken[i]) {
          pick = i;
          break;
        }
      }
      if (pick == n) {
        for (std::size_t i = n; i-- > 0;) {
          if (d2[i] > 0.0 && !taken[i]) {
            pick = i;
            break;
          }
        }
      }
    }
    if (pick == n) {
      // All remaining points coincide with a seed.
      for (std::size_t i = 0; i < n; ++i) {
        if (!taken[i]) {
          pick = i;
          break;
        }
      }
    }
    chosen.push_back(pick);
    taken[pick] = true;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], kernels::squared_distance(pts[i], pts[pick]));
    }
  }
  return chosen;
}

// Assigns every point to its nearest centroid (ties -> lowest index), then
// fixes empty clusters. Returns the WCSS of the resulting assignment.
double assign(const Points& pts, const EmbeddingMatrix& centroids_in, EmbeddingMatrix& centroids,
              std::vector<std::size_t>& assignment, std::vector<double>& dist) {
  const std::size_t n = pts.size();
  const std::size_t k = centroids_in.count();
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    double best_d = kernels::squared_distance(pts[i], centroids_in.column(0));
    for (std::size_t c = 1; c < k; ++c) {
      const double d = kernels::squared_distance(pts[i], centroids_in.column(c));
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    assignment[i] = best;
    dist[i] = best_d;
    ++sizes[best];
  }
  if (&centroids != &centroids_in) centroids = centroids_in;

  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] != 0) continue;
    // Farthest point from its own centroid that can be spared.
    std::size_t far = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (sizes[assignment[i]] < 2) continue;
      if (far == n || dist[i] > dist[far]) far = i;
    }
    if (far == n) {
      throw Error(ErrorCode::TooFewVectors, "cannot repair an empty cluster");
    }
    --sizes[assignment[far]];
    assignment[far] = c;
    dist[far] = 0.0;
    sizes[c] = 1;
    std::copy(pts[far].begin(), pts[far].end(), centroids.column(c).begin());
  }

  double wcss = 0.0;
  for (double d : dist) wcss += d;
  return wcss;
}

void update_centroids(const Points& pts, const std::vector<std::size_t>& assignment,
                      EmbeddingMatrix& centroids) {
  const std::size_t k = centroids.count();
  std::vector<std::size_t> sizes(k, 0);
  std::fill(centroids.values().begin(), centroids.values().end(), 0.0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    kernels::axpy(1.0, pts[i], centroids.column(assignment[i]));
    ++sizes[assignment[i]];
  }
  for (std::size_t c = 0; c < k; ++c) {
    kernels::scale(1.0 / static_cast<double>(sizes[c]), centroids.column(c));
  }
}

double total_wcss(const Points& pts, const std::vector<std::size_t>& assignment,
                  const EmbeddingMatrix& centroids) {
  double w = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    w += kernels::squared_distance(pts[i], centroids.column(assignment[i]));
  }
  return w;
}

std::vector<double> mean_of(const Points& pts, std::span<const std::size_t> members) {
  std::vector<double> mean(pts.dim, 0.0);
  for (std::size_t i : members) kernels::axpy(1.0, pts[i], mean);
  kernels::scale(1.0 / static_cast<double>(members.size()), mean);
  return mean;
}

}  // namespace

void ClusteringConfig::validate() const {
  if (k_min == 0 || k_max == 0 || k_min > k_max) {
    throw Error(ErrorCode::InvalidArgument, "need 1 <= k_min <= k_max");
  }
  if (max_iters <= 0 || min_cluster_size == 0 || !(rel_tol >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "clustering settings must be positive");
  }
}

KMeansResult kmeans(std::span<const double> data, std::size_t dim, std::size_t k,
                    const ClusteringConfig& cfg) {
  if (dim == 0 || data.size() % dim != 0) {
    throw Error(ErrorCode::DimensionMismatch, "k-means input is not a whole number of vectors");
  }
  const Points pts{data, dim};
  const std::size_t n = pts.size();
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  if (k > n) {
    throw Error(ErrorCode::TooFewVectors,
                "k = " + std::to_string(k) + " exceeds " + std::to_string(n) + " vectors");
  }

  Rng rng(cfg.seed);
  EmbeddingMatrix centroids(dim, 0);
  centroids.reserve(k);
  for (std::size_t s : kmeanspp_seeds(pts, k, rng)) centroids.append_column(pts[s]);

  KMeansResult res;
  res.assignments.assign(n, 0);
  std::vector<double> dist(n);
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < cfg.max_iters; ++it) {
    const double w = assign(pts, centroids, centroids, res.assignments, dist);
    res.history.push_back(w);
    update_centroids(pts, res.assignments, centroids);
    if (w == 0.0 || (std::isfinite(prev) && prev - w < cfg.rel_tol * prev)) break;
    prev = w;
  }
  res.wcss = total_wcss(pts, res.assignments, centroids);
  res.history.push_back(res.wcss);
  res.centroids = std::move(centroids);
  return res;
}

KMeansResult kmeans(const EmbeddingMatrix& vectors, std::size_t k, const ClusteringConfig& cfg) {
  return kmeans(vectors.values(), vectors.dim(), k, cfg);
}

std::size_t select_k_elbow(std::span<const std::pair<std::size_t, double>> curve) {
  if (curve.empty()) throw Error(ErrorCode::CurveTooShort, "empty WCSS curve");
  const std::size_t k_first = curve.front().first;
  if (curve.size() == 1) return k_first;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    if (curve[i].first != curve[i - 1].first + 1) {
      throw Error(ErrorCode::InvalidArgument, "WCSS curve must cover consecutive k");
    }
  }
  std::vector<double> w(curve.size());
  w[0] = curve[0].second;
  for (std::size_t i = 1; i < curve.size(); ++i) w[i] = std::min(curve[i].second, w[i - 1]);

  const double w_hi = w.front();
  const double w_lo = w.back();
  if (!(w_hi > w_lo)) return k_first;
  const double k_span = static_cast<double>(curve.back().first - k_first);

  std::size_t best = k_first;
  double best_d = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double x = static_cast<double>(curve[i].first - k_first) / k_span;
    const double y = (w[i] - w_lo) / (w_hi - w_lo);
    const double d = (1.0 - y) - x;
    if (d > best_d) {
      best_d = d;
      best = curve[i].first;
    }
  }
  return best;
}

std::string_view to_string(AnchorLevel level) {
  return level == AnchorLevel::Word ? "word" : "sense";
}

AnchorLevel parse_level(std::string_view s) {
  if (s == "word") return AnchorLevel::Word;
  if (s == "sense") return AnchorLevel::Sense;
  throw Error(ErrorCode::InvalidArgument, "level must be word or sense, got " + std::string(s));
}

std::size_t AnchorPairSet::senses_of(std::string_view type) const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.type == type ? 1 : 0;
  return n;
}

namespace {

struct TypeResult {
  std::vector<AnchorEntry> entries;
  std::size_t selected_k = 0;  // 0 when not clustered
};

TypeResult word_level(const std::string& type, const TypePairs& pairs, std::size_t dim) {
  std::vector<std::size_t> all(pairs.stored);
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  AnchorEntry e;
  e.type = type;
  e.target_anchor = mean_of(Points{pairs.target, dim}, all);
  e.source_anchor = mean_of(Points{pairs.source, dim}, all);
  e.support = pairs.stored;
  return TypeResult{{std::move(e)}, 0};
}

TypeResult sense_level(const std::string& type, const TypePairs& pairs, std::size_t dim,
                       const ClusteringConfig& cfg) {
  const std::size_t n = pairs.stored;
  const std::size_t k_hi = std::min({cfg.k_max, n / cfg.min_cluster_size, n});
  if (k_hi == 0) return word_level(type, pairs, dim);
  const std::size_t k_lo = std::min(cfg.k_min, k_hi);

  const Points target{pairs.target, dim};
  const Points source{pairs.source, dim};
  const std::uint64_t type_seed = mix_seed(cfg.seed, hash_string(type));

  std::vector<KMeansResult> runs;
  std::vector<std::pair<std::size_t, double>> curve;
  for (std::size_t k = k_lo; k <= k_hi; ++k) {
    ClusteringConfig run_cfg = cfg;
    run_cfg.seed = mix_seed(type_seed, k);
    runs.push_back(kmeans(pairs.target, dim, k, run_cfg));
    curve.emplace_back(k, runs.back().wcss);
  }
  const std::size_t chosen_k = select_k_elbow(curve);
  const KMeansResult& run = runs[chosen_k - k_lo];

  std::vector<std::vector<std::size_t>> members(chosen_k);
  for (std::size_t i = 0; i < n; ++i) members[run.assignments[i]].push_back(i);

  std::vector<std::size_t> survivors;
  for (std::size_t c = 0; c < chosen_k; ++c) {
    if (members[c].size() >= cfg.min_cluster_size) survivors.push_back(c);
  }
  TypeResult out;
  out.selected_k = chosen_k;
  if (survivors.empty()) {
    out.entries = word_level(type, pairs, dim).entries;
    return out;
  }
  std::vector<std::vector<std::size_t>> merged(chosen_k);
  for (std::size_t c = 0; c < chosen_k; ++c) {
    if (members[c].empty()) continue;
    std::size_t into = c;
    if (members[c].size() < cfg.min_cluster_size) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t s : survivors) {
        const double d =
            kernels::squared_distance(run.centroids.column(c), run.centroids.column(s));
        if (d < best) {
          best = d;
          into = s;
        }
      }
    }
    merged[into].insert(merged[into].end(), members[c].begin(), members[c].end());
  }
  std::size_t sense = 0;
  for (std::size_t s : survivors) {
    auto& idx = merged[s];
    std::sort(idx.begin(), idx.end());
    AnchorEntry e;
    e.type = type;
    e.sense_index = sense++;
    e.target_anchor = mean_of(target, idx);
    e.source_anchor = mean_of(source, idx);
    e.support = idx.size();
    out.entries.push_back(std::move(e));
  }
  return out;
}

}  // namespace

AnchorPairSet derive_sense_anchors(const TypeCollection& coll, const ClusteringConfig& cfg,
                                   AnchorLevel level) {
  cfg.validate();
  if (coll.empty()) throw Error(ErrorCode::EmptyCollection, "no aligned type pairs were collected");

  std::vector<const std::pair<const std::string, TypePairs>*> items;
  items.reserve(coll.size());
  for (const auto& item : coll.types()) items.push_back(&item);

  std::vector<TypeResult> results(items.size());
  parallel_for(items.size(), [&](std::size_t i) {
    const auto& [type, pairs] = *items[i];
    if (pairs.stored == 0) return;
    if (level == AnchorLevel::Sense && pairs.observed > cfg.min_count) {
      results[i] = sense_level(type, pairs, coll.dim(), cfg);
    } else {
      results[i] = word_level(type, pairs, coll.dim());
    }
  });

  AnchorPairSet set;
  set.dim = coll.dim();
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (results[i].selected_k) set.selected_k.emplace(items[i]->first, results[i].selected_k);
    for (auto& e : results[i].entries) set.entries.push_back(std::move(e));
  }
  return set;
}

}  // namespace xlmap
