#include "xlmap/synth.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <sstream>

#include "xlmap/corpus.hpp"
#include "xlmap/error.hpp"
#include "xlmap/kernels.hpp"
#include "xlmap/random.hpp"

namespace xlmap {
namespace {

using json = nlohmann::json;

std::vector<double> gaussian(std::size_t dim, Rng& rng) {
  std::vector<double> v(dim);
  for (double& x : v) x = rng.normal();
  return v;
}

std::vector<double> random_direction(std::size_t dim, Rng& rng, double norm) {
  std::vector<double> v = gaussian(dim, rng);
  normalize_in_place(v);
  kernels::scale(norm, v);
  return v;
}

// Number of types receiving 1, 2, ... senses (largest-remainder rounding).
std::vector<std::size_t> sense_counts(const std::vector<double>& probs, std::size_t n) {
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  std::vector<std::size_t> counts(probs.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < probs.size(); ++s) {
    const double exact = probs[s] / total * static_cast<double>(n);
    counts[s] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[s];
    remainders.emplace_back(exact - std::floor(exact), s);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& l, const auto& r) { return l.first > r.first; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++counts[remainders[i].second];
  return counts;
}

std::string target_label(std::size_t type) { return "t" + std::to_string(type); }
std::string source_label(std::size_t type) { return "s" + std::to_string(type); }

}  // namespace

void SynthConfig::validate() const {
  if (dim < 2) throw Error(ErrorCode::InvalidArgument, "synthetic dim must be at least 2");
  if (n_types == 0 || sentence_len == 0) {
    throw Error(ErrorCode::InvalidArgument, "n_types and sentence_len must be positive");
  }
  if (senses_per_type.empty()) {
    throw Error(ErrorCode::InvalidArgument, "senses_per_type must not be empty");
  }
  double total = 0.0;
  for (double p : senses_per_type) {
    if (!(p >= 0.0)) throw Error(ErrorCode::InvalidArgument, "sense probabilities must be >= 0");
    total += p;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::InvalidArgument, "sense probabilities sum to zero");
  if (!(noise_sigma >= 0.0) || !(anisotropy_offset_norm >= 0.0) || !(sense_offset_norm >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "noise and offsets must be non-negative");
  }
}

std::vector<double> random_orthogonal(std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  // Rows of a Gaussian matrix, orthonormalized in order.
  std::vector<double> q(dim * dim);
  for (std::size_t r = 0; r < dim; ++r) {
    std::span<double> row(q.data() + r * dim, dim);
    for (;;) {
      for (double& x : row) x = rng.normal();
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t p = 0; p < r; ++p) {
          std::span<const double> prev(q.data() + p * dim, dim);
          kernels::axpy(-kernels::dot(prev, row), prev, row);
        }
      }
      if (std::sqrt(kernels::sum_squares(row)) > 1e-6) break;
    }
    normalize_in_place(row);
  }
  return q;
}

OrthogonalMap GroundTruth::a_map() const { return OrthogonalMap{dim, a, 0.0}; }

EmbeddingMatrix GroundTruth::target_matrix() const {
  EmbeddingMatrix m(dim, 0);
  for (const auto& [label, v] : target_senses) m.append_column(v, label);
  return m;
}

EmbeddingMatrix GroundTruth::source_matrix() const {
  EmbeddingMatrix m(dim, 0);
  for (const auto& [label, v] : source_senses) m.append_column(v, label);
  return m;
}

SynthBundle generate_synthetic(const SynthConfig& cfg, const std::string& prefix) {
  cfg.validate();
  const std::size_t d = cfg.dim;
  Rng rng(cfg.seed);

  GroundTruth truth;
  truth.dim = d;
  truth.a = random_orthogonal(d, mix_seed(cfg.seed, 1));
  const OrthogonalMap a = truth.a_map();

  // Which target types get how many senses.
  const auto counts = sense_counts(cfg.senses_per_type, cfg.n_types);
  std::vector<std::size_t> senses;
  for (std::size_t s = 0; s < counts.size(); ++s) senses.insert(senses.end(), counts[s], s + 1);
  for (std::size_t i = senses.size(); i > 1; --i) {
    std::swap(senses[i - 1], senses[rng.below(i)]);
  }

  const auto target_offset = random_direction(d, rng, cfg.anisotropy_offset_norm);
  const auto source_offset = random_direction(d, rng, cfg.anisotropy_offset_norm);

  // Per (type, sense): source type id, clean source vector, clean target vector.
  struct Sense {
    std::size_t source_type;
    std::vector<double> source_clean;
    std::vector<double> target_clean;
  };
  std::vector<std::vector<Sense>> table(cfg.n_types);
  std::size_t next_source = 0;
  for (std::size_t t = 0; t < cfg.n_types; ++t) {
    for (std::size_t s = 0; s < senses[t]; ++s) {
      Sense sense;
      sense.source_type = next_source++;
      std::vector<double> u = gaussian(d, rng);
      normalize_in_place(u);
      const auto sense_offset = random_direction(d, rng, cfg.sense_offset_norm);

      sense.source_clean = u;
      kernels::axpy(1.0, source_offset, sense.source_clean);
      sense.target_clean = apply_map(a, u);
      kernels::axpy(1.0, sense_offset, sense.target_clean);
      kernels::axpy(1.0, target_offset, sense.target_clean);

      const std::string tl = target_label(t) + "@" + std::to_string(s);
      const std::string sl = source_label(sense.source_type);
      truth.type_truth[tl] = sl;
      truth.target_senses[tl] = sense.target_clean;
      truth.source_senses[sl] = sense.source_clean;
      table[t].push_back(std::move(sense));
    }
  }

  SynthBundle out{prefix + ".target.tec.jsonl", prefix + ".source.tec.jsonl", prefix + ".align",
                  prefix + ".truth.json"};
  CorpusWriter target(out.target_corpus, d);
  CorpusWriter source(out.source_corpus, d);
  std::ofstream align(out.alignments, std::ios::binary);
  if (!align) throw Error(ErrorCode::IoError, "cannot write " + out.alignments);

  std::string align_line;
  for (std::size_t k = 0; k < cfg.n_sentences; ++k) {
    SentenceRecord trec;
    SentenceRecord srec;
    trec.id = srec.id = k;
    trec.dim = srec.dim = d;
    trec.vectors.reserve(cfg.sentence_len * d);
    srec.vectors.reserve(cfg.sentence_len * d);
    align_line.clear();
    for (std::size_t pos = 0; pos < cfg.sentence_len; ++pos) {
      const std::size_t t = rng.below(cfg.n_types);
      const Sense& sense = table[t][rng.below(table[t].size())];
      trec.tokens.push_back(target_label(t));
      srec.tokens.push_back(source_label(sense.source_type));
      for (std::size_t i = 0; i < d; ++i) {
        trec.vectors.push_back(sense.target_clean[i] + cfg.noise_sigma * rng.normal());
      }
      for (std::size_t i = 0; i < d; ++i) {
        srec.vectors.push_back(sense.source_clean[i] + cfg.noise_sigma * rng.normal());
      }
      if (pos) align_line += ' ';
      align_line += std::to_string(pos) + "-" + std::to_string(pos);
    }
    target.write(trec);
    source.write(srec);
    align_line += '\n';
    align << align_line;
  }
  target.close();
  source.close();
  align.close();
  if (!align) throw Error(ErrorCode::IoError, "write failure on " + out.alignments);

  save_ground_truth(truth, out.truth);
  return out;
}

void save_ground_truth(const GroundTruth& truth, const std::string& path) {
  json j;
  json a = json::array();
  for (std::size_t r = 0; r < truth.dim; ++r) {
    a.push_back(std::vector<double>(truth.a.begin() + static_cast<std::ptrdiff_t>(r * truth.dim),
                                    truth.a.begin() + static_cast<std::ptrdiff_t>((r + 1) * truth.dim)));
  }
  j["dim"] = truth.dim;
  j["a"] = std::move(a);
  j["type_truth"] = truth.type_truth;
  j["sense_vectors"] = {{"target", truth.target_senses}, {"source", truth.source_senses}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << j.dump() << "\n";
  if (!out) throw Error(ErrorCode::IoError, "write failure on " + path);
}

GroundTruth load_ground_truth(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    const json j = json::parse(ss.str());
    GroundTruth t;
    const auto& a = j.at("a");
    t.dim = a.size();
    for (const auto& row : a) {
      auto r = row.get<std::vector<double>>();
      if (r.size() != t.dim) throw Error(ErrorCode::FormatError, path + ": a must be square");
      t.a.insert(t.a.end(), r.begin(), r.end());
    }
    t.type_truth = j.at("type_truth").get<std::map<std::string, std::string>>();
    const auto& sv = j.at("sense_vectors");
    t.target_senses = sv.at("target").get<std::map<std::string, std::vector<double>>>();
    t.source_senses = sv.at("source").get<std::map<std::string, std::vector<double>>>();
    for (const auto* m : {&t.target_senses, &t.source_senses}) {
      for (const auto& [label, v] : *m) {
        if (v.size() != t.dim) {
          throw Error(ErrorCode::FormatError, path + ": sense vector " + label + " has wrong length");
        }
      }
    }
    return t;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, path + ": " + e.what());
  }
}

}  // namespace xlmap
