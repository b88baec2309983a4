// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any fail.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>

#include "test_support.hpp"
#include "xlmap/cli.hpp"
#include "xlmap/corpus.hpp"
#include "xlmap/eval.hpp"
#include "xlmap/error.hpp"
#include "xlmap/isotropy.hpp"
#include "xlmap/kernels.hpp"
#include "xlmap/parallel.hpp"
#include "xlmap/pipeline.hpp"
#include "xlmap/random.hpp"
#include "xlmap/synth.hpp"

namespace {

using namespace xlmap;
using Clock = std::chrono::steady_clock;

// Pinned thresholds.
constexpr double kOrthoTol = 1e-6;
constexpr int kOrthoPairs = 100;
constexpr int kOrthoCandidates = 1000;
constexpr double kOrthoSeconds = 10.0;

constexpr double kGridTol = 1e-3;
constexpr double kGridStep = 1e-4;
constexpr int kGridInstances = 50;
constexpr double kGridSeconds = 30.0;

constexpr double kMapErrorMax = 0.05;
constexpr double kP1Min = 0.99;
constexpr double kPlantedSeconds = 60.0;

constexpr double kAnisoBeforeMin = 0.5;
constexpr double kAnisoAfterOneMax = 0.05;
constexpr double kAnisoAfterFiveMax = 0.01;

constexpr double kElbowTwoMin = 0.90;

constexpr std::size_t kCap = 10000;
constexpr std::size_t kMinCount = 100;

constexpr std::size_t kScaleSentences = 100000;
constexpr std::size_t kScaleDim = 32;
constexpr std::size_t kScaleLen = 10;
constexpr std::size_t kScaleTypes = 50;
constexpr std::size_t kScaleCap = 2000;
constexpr double kScaleSeconds = 300.0;
// Headroom over the collection formula for vector growth and one sentence.
constexpr double kScaleGrowth = 2.0;
constexpr std::size_t kScaleSlackBytes = 64u << 20;

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome orthogonality_suite() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(20240601);
  std::uniform_int_distribution<int> extra(0, 40);
  double worst_ortho = 0.0;
  int beaten = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  const int dims[] = {2, 8, 32};
  for (int p = 0; p < kOrthoPairs; ++p) {
    const int d = dims[p % 3];
    const int n = d + extra(gen);
    const Eigen::MatrixXd x = testing::gaussian_matrix(d, n, gen);
    Eigen::MatrixXd y;
    if (p % 2 == 0) {
      y = testing::random_orthogonal_oracle(d, gen) * x + 0.1 * testing::gaussian_matrix(d, n, gen);
    } else {
      y = testing::gaussian_matrix(d, n, gen);
    }
    const OrthogonalMap w = solve_procrustes(testing::from_eigen(x), testing::from_eigen(y));
    const Eigen::MatrixXd we = testing::to_eigen(w);
    worst_ortho = std::max(worst_ortho,
                           (we.transpose() * we - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff());
    const double r = (we * x - y).norm();
    for (int c = 0; c < kOrthoCandidates; ++c) {
      const double rc = (testing::random_orthogonal_oracle(d, gen) * x - y).norm();
      worst_margin = std::min(worst_margin, rc - r);
      if (rc < r) ++beaten;
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = worst_ortho <= kOrthoTol && beaten == 0 && secs < kOrthoSeconds;
  return {ok, fmt("max|WtW-I|=%.3g beaten=%d min_margin=%.3g time=%.2fs", worst_ortho, beaten,
                  worst_margin, secs)};
}

Outcome grid_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(77);
  std::uniform_int_distribution<int> cols(2, 12);
  double worst = 0.0;
  for (int i = 0; i < kGridInstances; ++i) {
    const int n = cols(gen);
    const Eigen::MatrixXd x = testing::gaussian_matrix(2, n, gen);
    const Eigen::MatrixXd y = (i % 2 == 0) ? testing::gaussian_matrix(2, n, gen)
                                           : Eigen::MatrixXd(testing::random_orthogonal_oracle(2, gen) * x +
                                                             0.2 * testing::gaussian_matrix(2, n, gen));
    const OrthogonalMap w = solve_procrustes(testing::from_eigen(x), testing::from_eigen(y));
    const auto grid = testing::procrustes_grid_2d(x, y, kGridStep);
    worst = std::max(worst, std::abs(w.residual - grid.residual));
  }
  const double secs = seconds_since(t0);
  return {worst <= kGridTol && secs < kGridSeconds,
          fmt("max|r_solver-r_grid|=%.3g time=%.2fs", worst, secs)};
}

Outcome planted_recovery(const testing::TempDir& dir) {
  const auto t0 = Clock::now();
  SynthConfig sc;
  sc.dim = 32;
  sc.n_types = 500;
  sc.n_sentences = 2000;
  sc.noise_sigma = 0.01;
  sc.seed = 7;
  const auto b = generate_synthetic(sc, dir.file("c3"));
  PipelineConfig pc;
  pc.use_in = false;
  const auto art = train_mapping(b.target_corpus, b.source_corpus, b.alignments, pc);
  const auto truth = load_ground_truth(b.truth);
  const double err = map_recovery_error(art.w, truth);
  const auto rep = evaluate_retrieval(art, truth);
  const double secs = seconds_since(t0);
  return {err <= kMapErrorMax && rep.p_at_1 >= kP1Min && secs < kPlantedSeconds,
          fmt("map_error=%.5f P@1=%.4f queries=%zu time=%.2fs", err, rep.p_at_1, rep.queries, secs)};
}

EmbeddingMatrix corpus_vectors(const std::string& path) {
  CorpusReader r(path);
  EmbeddingMatrix m(r.dim(), 0);
  while (auto rec = r.next())
    for (std::size_t i = 0; i < rec->size(); ++i) m.append_column(rec->vector(i));
  return m;
}

Outcome anisotropy_cure(const testing::TempDir& dir) {
  SynthConfig sc;
  sc.anisotropy_offset_norm = 5.0;
  sc.seed = 11;
  const auto b = generate_synthetic(sc, dir.file("c4"));
  bool ok = true;
  std::string detail;
  for (const auto& [side, path] : {std::pair{"target", b.target_corpus}, {"source", b.source_corpus}}) {
    const EmbeddingMatrix m = corpus_vectors(path);
    const double before = anisotropy_score(m, kDefaultAnisotropySample, 1);
    const double one = anisotropy_score(fit_iterative_normalization(m, 1).normalized,
                                        kDefaultAnisotropySample, 1);
    const double five = anisotropy_score(fit_iterative_normalization(m, 5).normalized,
                                         kDefaultAnisotropySample, 1);
    ok = ok && before >= kAnisoBeforeMin && std::abs(one) <= kAnisoAfterOneMax &&
         std::abs(five) <= kAnisoAfterFiveMax;
    detail += fmt("%s: %.4f -> %.5f -> %.5f; ", side, before, one, five);
  }
  PipelineConfig with_in;
  PipelineConfig without_in;
  without_in.use_in = false;
  const double r_in = train_mapping(b.target_corpus, b.source_corpus, b.alignments, with_in).residual;
  const double r_raw =
      train_mapping(b.target_corpus, b.source_corpus, b.alignments, without_in).residual;
  ok = ok && r_in < r_raw;
  detail += fmt("residual IN=%.4f noIN=%.4f", r_in, r_raw);
  return {ok, detail};
}

// Each true sense is queried with the learned target anchor of its type that
// lies closest to it; a word-level anchor has to stand in for every sense.
double anchor_level_p1(const TrainResult& r, const GroundTruth& truth) {
  const MappingArtifact& art = r.artifact;
  const EmbeddingMatrix& anchors = r.target_anchors;
  EmbeddingMatrix queries(art.dim, 0);
  for (const auto& [label, clean] : truth.target_senses) {
    const std::string type = label.substr(0, label.find('@'));
    std::vector<double> v = clean;
    apply_in_place(art.target_in, v);
    std::size_t best = anchors.count();
    double best_dot = -2.0;
    for (std::size_t j = 0; j < anchors.count(); ++j) {
      if (anchors.label(j).compare(0, type.size() + 1, type + "@") != 0) continue;
      const double dot = kernels::dot(anchors.column(j), v);
      if (dot > best_dot) {
        best_dot = dot;
        best = j;
      }
    }
    if (best == anchors.count()) throw Error(ErrorCode::MissingLabel, "no anchor for " + type);
    queries.append_column(apply_map(art.w, anchors.column(best)), label);
  }
  EmbeddingMatrix sources(art.dim, 0);
  for (const auto& [label, clean] : truth.source_senses)
    sources.append_column(normalize_source_vector(art, clean), label);
  return retrieval_precision(queries, sources, truth.type_truth, 1);
}

Outcome sense_benefit(const testing::TempDir& dir) {
  SynthConfig sc;
  sc.dim = 32;
  sc.n_types = 200;
  sc.n_sentences = 4000;
  sc.senses_per_type = {0.7, 0.3};
  sc.sense_offset_norm = 0.3;
  sc.seed = 5;
  const auto b = generate_synthetic(sc, dir.file("c5"));
  const auto truth = load_ground_truth(b.truth);

  PipelineConfig sense;
  PipelineConfig word;
  word.level = AnchorLevel::Word;
  const TrainResult rs = train(b.target_corpus, b.source_corpus, b.alignments, sense);
  const TrainResult rw = train(b.target_corpus, b.source_corpus, b.alignments, word);

  std::size_t two_sense = 0;
  std::size_t picked_two = 0;
  for (const auto& [label, _] : truth.type_truth) {
    if (label.substr(label.find('@')) != "@1") continue;
    const std::string type = label.substr(0, label.find('@'));
    ++two_sense;
    const auto it = rs.anchors.selected_k.find(type);
    if (it != rs.anchors.selected_k.end() && it->second == 2) ++picked_two;
  }
  const double frac = two_sense ? static_cast<double>(picked_two) / two_sense : 0.0;
  const auto ps = evaluate_retrieval(rs.artifact, truth);
  const auto pw = evaluate_retrieval(rw.artifact, truth);
  const double as = anchor_level_p1(rs, truth);
  const double aw = anchor_level_p1(rw, truth);
  return {two_sense > 0 && frac >= kElbowTwoMin && ps.p_at_1 >= pw.p_at_1 && as >= aw,
          fmt("k=2 on %zu/%zu two-sense types (%.3f); map P@1 sense=%.4f word=%.4f (%+.4f); "
              "anchor P@1 sense=%.4f word=%.4f (%+.4f); anchors sense=%zu word=%zu",
              picked_two, two_sense, frac, ps.p_at_1, pw.p_at_1, ps.p_at_1 - pw.p_at_1, as, aw,
              as - aw, rs.artifact.anchor_count, rw.artifact.anchor_count)};
}

Outcome operational_settings(const testing::TempDir& dir) {
  const std::size_t d = 4;
  const std::size_t frequent = 10500;
  const std::size_t rare = 80;
  Rng rng(3);
  {
    CorpusWriter t(dir.file("c6.t"), d);
    CorpusWriter s(dir.file("c6.s"), d);
    std::ofstream a(dir.file("c6.a"));
    for (std::size_t i = 0; i < frequent + rare; ++i) {
      SentenceRecord tr, sr;
      tr.id = sr.id = i;
      tr.dim = sr.dim = d;
      tr.tokens = {i < frequent ? "De" : "raro", "filler"};
      sr.tokens = {i < frequent ? "of" : "rare", "pad"};
      for (std::size_t k = 0; k < 2 * d; ++k) {
        tr.vectors.push_back(rng.normal());
        sr.vectors.push_back(rng.normal());
      }
      t.write(tr);
      s.write(sr);
      a << "0-0\n";
    }
    t.close();
    s.close();
  }
  CorpusReader t(dir.file("c6.t")), s(dir.file("c6.s"));
  AlignmentReader a(dir.file("c6.a"));
  CollectOptions opt;
  opt.cap = kCap;
  TypeCollection coll = collect_type_pairs(t, s, a, opt);
  const TypePairs* de = coll.find("de");
  const TypePairs* raro = coll.find("raro");
  if (!de || !raro) return {false, "planted types missing from the collection"};
  const std::size_t de_stored = de->stored;
  const std::uint64_t de_seen = de->observed;

  PipelineConfig cfg;
  cfg.cap = kCap;
  cfg.min_count = kMinCount;
  const TrainResult res = train_from_collection(std::move(coll), cfg);
  const std::size_t raro_senses = res.anchors.senses_of("raro");
  const bool raro_clustered = res.anchors.selected_k.count("raro") > 0;
  std::size_t de_support = 0;
  for (const auto& e : res.anchors.entries)
    if (e.type == "de") de_support += e.support;
  return {de_stored == kCap && de_seen == frequent && de_support == kCap && raro_senses == 1 &&
              !raro_clustered,
          fmt("de stored=%zu observed=%llu anchor_support=%zu; raro senses=%zu clustered=%d",
              de_stored, static_cast<unsigned long long>(de_seen), de_support, raro_senses,
              raro_clustered ? 1 : 0)};
}

Outcome determinism(const testing::TempDir& dir) {
  SynthConfig sc;
  sc.n_types = 150;
  sc.n_sentences = 1500;
  sc.senses_per_type = {0.7, 0.3};
  sc.sense_offset_norm = 0.3;
  sc.anisotropy_offset_norm = 2.0;
  const auto b = generate_synthetic(sc, dir.file("c7"));
  auto align = [&](const std::string& out) {
    std::ostringstream o, e;
    return cli::run({"align", "--target-corpus", b.target_corpus, "--source-corpus",
                     b.source_corpus, "--alignments", b.alignments, "--out", out, "--seed", "9"},
                    o, e);
  };
  const int c1 = align(dir.file("c7.one.map.json"));
  const int c2 = align(dir.file("c7.two.map.json"));
  const std::string a1 = slurp(dir.file("c7.one.map.json"));
  const bool same_artifact = c1 == 0 && c2 == 0 && !a1.empty() &&
                             a1 == slurp(dir.file("c7.two.map.json"));

  const EmbeddingMatrix m = corpus_vectors(b.target_corpus);
  bool same_score = true;
  double ref = 0.0;
  const int counts[] = {1, 2, 4, 8};
  for (int threads : counts) {
    set_num_threads(threads);
    for (std::size_t sample : {std::size_t{1000}, std::size_t{5000}}) {
      const double s = anisotropy_score(m, sample, 42);
      if (threads == 1 && sample == 1000) ref = s;
      if (sample == 1000 && s != ref) same_score = false;
    }
  }
  set_num_threads(0);
  return {same_artifact && same_score,
          fmt("artifacts identical=%d (%zu bytes); anisotropy identical over 1/2/4/8 threads=%d "
              "(%.17g)",
              same_artifact ? 1 : 0, a1.size(), same_score ? 1 : 0, ref)};
}

std::size_t vm_hwm_bytes() {
  std::ifstream in("/proc/self/status");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("VmHWM:", 0) == 0) return std::stoull(line.substr(6)) * 1024;
  }
  return 0;
}

std::size_t vm_rss_bytes() {
  std::ifstream in("/proc/self/status");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("VmRSS:", 0) == 0) return std::stoull(line.substr(6)) * 1024;
  }
  return 0;
}

bool reset_hwm() {
  std::ofstream f("/proc/self/clear_refs");
  f << "5";
  f.flush();
  return static_cast<bool>(f);
}

Outcome ingestion_scale(const testing::TempDir& dir) {
  SynthConfig sc;
  sc.dim = kScaleDim;
  sc.n_types = kScaleTypes;
  sc.n_sentences = kScaleSentences;
  sc.sentence_len = kScaleLen;
  sc.seed = 8;
  const auto gen0 = Clock::now();
  const auto b = generate_synthetic(sc, dir.file("c8"));
  const double gen_secs = seconds_since(gen0);
  const double corpus_mb =
      static_cast<double>(std::filesystem::file_size(b.target_corpus) +
                          std::filesystem::file_size(b.source_corpus)) / (1 << 20);

  const std::size_t base_rss = vm_rss_bytes();
  const bool hwm_reset = reset_hwm();
  const auto t0 = Clock::now();
  CorpusReader t(b.target_corpus), s(b.source_corpus);
  AlignmentReader a(b.alignments);
  CollectOptions opt;
  opt.cap = kScaleCap;
  TypeCollection coll = collect_type_pairs(t, s, a, opt);
  const double ingest_secs = seconds_since(t0);
  const std::size_t peak = vm_hwm_bytes();

  std::uint64_t observed = 0;
  for (const auto& [_, p] : coll.types()) observed += p.observed;
  const std::size_t formula = coll.size() * kScaleCap * kScaleDim * 2 * sizeof(double);
  const std::size_t bound = base_rss + static_cast<std::size_t>(kScaleGrowth * formula) + kScaleSlackBytes;

  PipelineConfig cfg;
  cfg.cap = kScaleCap;
  const TrainResult res = train_from_collection(std::move(coll), cfg);
  const double total_secs = seconds_since(t0);

  std::filesystem::remove(b.target_corpus);
  std::filesystem::remove(b.source_corpus);

  const bool ok = hwm_reset && observed == kScaleSentences * kScaleLen && peak <= bound &&
                  total_secs < kScaleSeconds;
  return {ok, fmt("%zu sentences (%.0f MB) synth=%.1fs ingest=%.1fs end-to-end=%.1fs; "
                  "peak=%.1f MB bound=%.1f MB (collection formula %.1f MB); anchors=%zu%s",
                  kScaleSentences, corpus_mb, gen_secs, ingest_secs, total_secs,
                  peak / 1048576.0, bound / 1048576.0, formula / 1048576.0,
                  res.artifact.anchor_count, hwm_reset ? "" : " (peak reset unavailable)")};
}

}  // namespace

int main() {
  testing::TempDir dir;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"orthogonality suite", orthogonality_suite},
      {"2-D grid oracle equivalence", grid_equivalence},
      {"planted-map recovery", [&] { return planted_recovery(dir); }},
      {"anisotropy cure", [&] { return anisotropy_cure(dir); }},
      {"sense-level benefit", [&] { return sense_benefit(dir); }},
      {"operational settings", [&] { return operational_settings(dir); }},
      {"determinism", [&] { return determinism(dir); }},
      {"ingestion scale", [&] { return ingestion_scale(dir); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::cout << "criterion " << (i + 1) << " [" << criteria[i].first << "]: "
              << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
