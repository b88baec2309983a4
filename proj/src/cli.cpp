#include "xlmap/cli.hpp"

#include <CLI11.hpp>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "format.hpp"
#include "xlmap/corpus.hpp"
#include "xlmap/error.hpp"
#include "xlmap/eval.hpp"
#include "xlmap/isotropy.hpp"
#include "xlmap/kernels.hpp"
#include "xlmap/parallel.hpp"
#include "xlmap/pipeline.hpp"
#include "xlmap/synth.hpp"
#include "xlmap/word2vec.hpp"

namespace xlmap::cli {
namespace {

using json = nlohmann::json;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::SvdFailure:
    case ErrorCode::DegenerateVector:
    case ErrorCode::InsufficientVectors:
    case ErrorCode::TooFewVectors:
    case ErrorCode::CurveTooShort:
      return 2;
    default:
      return 1;
  }
}

std::string fixed(double v, int digits = 6) {
  std::ostringstream ss;
  ss.imbue(std::locale::classic());
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

void require_file(const std::string& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::IoError, "no such file: " + path);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  return out;
}

// Vectors of either a .tec.jsonl corpus (labels = tokens, sentence shape kept
// for writing back) or a word2vec text file.
struct VectorFile {
  bool corpus = false;
  EmbeddingMatrix vectors;
  std::vector<std::uint64_t> ids;
  std::vector<std::size_t> lengths;
};

bool looks_like_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  char c = 0;
  while (in.get(c) && std::isspace(static_cast<unsigned char>(c))) {
  }
  return c == '{';
}

VectorFile load_vectors(const std::string& path) {
  require_file(path);
  VectorFile f;
  if (!looks_like_corpus(path)) {
    f.vectors = read_word2vec(path);
    return f;
  }
  f.corpus = true;
  CorpusReader reader(path);
  f.vectors = EmbeddingMatrix(reader.dim(), 0);
  while (auto rec = reader.next()) {
    f.ids.push_back(rec->id);
    f.lengths.push_back(rec->size());
    for (std::size_t i = 0; i < rec->size(); ++i) {
      f.vectors.append_column(rec->vector(i), rec->tokens[i]);
    }
  }
  return f;
}

void save_vectors(const VectorFile& f, const EmbeddingMatrix& m, const std::string& path) {
  if (!f.corpus) {
    write_word2vec(path, m);
    return;
  }
  CorpusWriter w(path, m.dim());
  std::size_t col = 0;
  for (std::size_t s = 0; s < f.ids.size(); ++s) {
    SentenceRecord rec;
    rec.id = f.ids[s];
    rec.dim = m.dim();
    for (std::size_t i = 0; i < f.lengths[s]; ++i, ++col) {
      rec.tokens.push_back(m.label(col));
      const auto c = m.column(col);
      rec.vectors.insert(rec.vectors.end(), c.begin(), c.end());
    }
    w.write(rec);
  }
  w.close();
}

struct AlignArgs {
  std::string target_corpus, source_corpus, alignments, out, export_prefix;
  std::string target_side = "left";
  std::string level = "sense";
  std::size_t max_vectors = kDefaultCap;
  std::size_t min_count = 100;
  std::size_t k_min = 1;
  std::size_t k_max = 10;
  std::size_t min_cluster_size = 5;
  int max_iters = 100;
  int in_iters = kDefaultInIterations;
  bool no_in = false;
  bool lowercase = true;
  std::uint64_t seed = 42;
};

int do_align(const AlignArgs& a, std::ostream& out) {
  for (const auto* p : {&a.target_corpus, &a.source_corpus, &a.alignments}) require_file(*p);
  PipelineConfig cfg;
  cfg.cap = a.max_vectors;
  cfg.min_count = a.min_count;
  cfg.clustering.k_min = a.k_min;
  cfg.clustering.k_max = a.k_max;
  cfg.clustering.min_cluster_size = a.min_cluster_size;
  cfg.clustering.max_iters = a.max_iters;
  cfg.in_iterations = a.in_iters;
  cfg.use_in = !a.no_in;
  cfg.lowercase = a.lowercase;
  cfg.level = parse_level(a.level);
  cfg.target_side = a.target_side == "right" ? Side::Right : Side::Left;
  cfg.seed = a.seed;

  TrainResult res = train(a.target_corpus, a.source_corpus, a.alignments, cfg);
  save_artifact(res.artifact, a.out);
  if (!a.export_prefix.empty()) {
    write_word2vec(a.export_prefix + ".target.vec", res.target_anchors);
    write_word2vec(a.export_prefix + ".source.vec", res.source_anchors);
  }
  out << "types " << res.types << "\n"
      << "stored_pairs " << res.stored_pairs << "\n"
      << "level " << to_string(cfg.level) << "\n"
      << "iterative_normalization " << (cfg.use_in ? "on" : "off") << "\n"
      << "anchors " << res.artifact.anchor_count << "\n"
      << "residual " << detail::format_double(res.artifact.residual) << "\n";
  for (const auto& w : res.artifact.warnings) out << "warning " << w << "\n";
  out << "wrote " << a.out << "\n";
  return 0;
}

int do_apply(const std::string& artifact_path, const std::string& input, const std::string& output,
             const std::string& side, std::ostream& out) {
  require_file(artifact_path);
  const MappingArtifact art = load_artifact(artifact_path);
  VectorFile f = load_vectors(input);
  if (f.vectors.dim() != art.dim) {
    throw Error(ErrorCode::DimensionMismatch, input + " has dimension " +
                                                  std::to_string(f.vectors.dim()) +
                                                  ", artifact has " + std::to_string(art.dim));
  }
  EmbeddingMatrix mapped = f.vectors;
  for (std::size_t j = 0; j < mapped.count(); ++j) {
    const auto v = side == "source" ? normalize_source_vector(art, f.vectors.column(j))
                                    : transfer_vector(art, f.vectors.column(j));
    std::copy(v.begin(), v.end(), mapped.column(j).begin());
  }
  save_vectors(f, mapped, output);
  out << "mapped " << mapped.count() << " vectors (" << side << " side) to " << output << "\n";
  return 0;
}

int do_anisotropy(const std::string& input, std::size_t sample, std::uint64_t seed,
                  const std::string& csv, std::string label, std::ostream& out) {
  const VectorFile f = load_vectors(input);
  const double score = anisotropy_score(f.vectors, sample, seed);
  const std::size_t used = std::min(sample, f.vectors.count());
  if (label.empty()) label = std::filesystem::path(input).filename().string();
  out << "vectors " << f.vectors.count() << "\n"
      << "sample_size " << used << "\n"
      << "anisotropy " << fixed(score) << "\n";
  if (!csv.empty()) {
    auto c = open_out(csv);
    c << "label,n_vectors,sample_size,seed,score\n"
      << label << "," << f.vectors.count() << "," << used << "," << seed << ","
      << detail::format_double(score) << "\n";
  }
  return 0;
}

void save_transform(const INTransform& t, const std::string& path) {
  json j;
  j["dim"] = t.dim;
  j["means"] = t.means;
  auto o = open_out(path);
  o << j.dump() << "\n";
}

INTransform load_transform(const std::string& path) {
  require_file(path);
  std::ifstream in(path);
  try {
    const json j = json::parse(in);
    INTransform t;
    t.dim = j.at("dim").get<std::size_t>();
    t.means = j.at("means").get<std::vector<std::vector<double>>>();
    if (t.means.empty()) throw Error(ErrorCode::FormatError, path + ": no means");
    for (const auto& m : t.means) {
      if (m.size() != t.dim) throw Error(ErrorCode::FormatError, path + ": mean of wrong length");
    }
    return t;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, path + ": " + e.what());
  }
}

int do_in(const std::string& input, int iters, std::size_t sample, std::uint64_t seed,
          const std::string& csv, const std::string& output, const std::string& save_path,
          const std::string& load_path, std::ostream& out) {
  const VectorFile f = load_vectors(input);
  std::vector<std::array<double, 2>> rows;  // mean_norm, score
  rows.push_back({0.0, anisotropy_score(f.vectors, sample, seed)});
  {
    std::vector<double> mean(f.vectors.dim(), 0.0);
    for (std::size_t j = 0; j < f.vectors.count(); ++j) kernels::axpy(1.0, f.vectors.column(j), mean);
    kernels::scale(1.0 / static_cast<double>(f.vectors.count()), mean);
    rows[0][0] = std::sqrt(kernels::sum_squares(mean));
  }

  EmbeddingMatrix result;
  INTransform transform;
  if (!load_path.empty()) {
    transform = load_transform(load_path);
    EmbeddingMatrix m = f.vectors;
    for (std::size_t t = 0; t < transform.iterations(); ++t) {
      INTransform step{transform.dim, {transform.means[t]}};
      m = apply_in(step, std::move(m));
      rows.push_back({std::sqrt(kernels::sum_squares(transform.means[t])),
                      anisotropy_score(m, sample, seed)});
    }
    result = std::move(m);
  } else {
    // One pass at a time so the score after every iteration can be reported.
    EmbeddingMatrix m = f.vectors;
    transform.dim = m.dim();
    bool converged = false;
    for (int t = 0; t < iters; ++t) {
      if (converged) {
        transform.means.emplace_back(m.dim(), 0.0);
        rows.push_back({0.0, rows.back()[1]});
        continue;
      }
      InFit step = fit_iterative_normalization(std::move(m), 1);
      m = std::move(step.normalized);
      converged = step.mean_norms[0] < kInConvergedMeanNorm;
      transform.means.push_back(std::move(step.transform.means[0]));
      rows.push_back({step.mean_norms[0], anisotropy_score(m, sample, seed)});
    }
    result = std::move(m);
  }

  out << "iteration mean_norm anisotropy\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << i << " " << fixed(rows[i][0], 9) << " " << fixed(rows[i][1]) << "\n";
  }
  if (!csv.empty()) {
    auto c = open_out(csv);
    c << "iteration,mean_norm,anisotropy_score\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      c << i << "," << detail::format_double(rows[i][0]) << ","
        << detail::format_double(rows[i][1]) << "\n";
    }
  }
  if (!save_path.empty()) save_transform(transform, save_path);
  if (!output.empty()) save_vectors(f, result, output);
  return 0;
}

int do_eval(const std::string& artifact_path, const std::string& truth_path,
            const std::string& csv, std::ostream& out) {
  require_file(artifact_path);
  require_file(truth_path);
  const MappingArtifact art = load_artifact(artifact_path);
  const GroundTruth truth = load_ground_truth(truth_path);
  const RetrievalReport r = evaluate_retrieval(art, truth);
  out << "queries " << r.queries << "\n"
      << "candidates " << r.candidates << "\n"
      << "P@1 " << fixed(r.p_at_1, 4) << "\n"
      << "P@5 " << fixed(r.p_at_5, 4) << "\n"
      << "map_error " << fixed(map_recovery_error(art.w, truth), 6) << "\n";
  if (!csv.empty()) {
    auto c = open_out(csv);
    c << "queries,candidates,p_at_1,p_at_5\n"
      << r.queries << "," << r.candidates << "," << detail::format_double(r.p_at_1) << ","
      << detail::format_double(r.p_at_5) << "\n";
  }
  return 0;
}

std::vector<double> parse_distribution(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "bad sense distribution entry \"" + part + "\"");
    }
  }
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"xlmap: sense-level orthogonal mapping between embedding spaces"};
  app.require_subcommand(1);
  app.fallthrough();
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = all cores)");
  std::string kernels_isa;
  app.add_option("--kernels", kernels_isa, "Force kernel variant")
      ->check(CLI::IsMember({"scalar", "avx2", "neon"}));

  AlignArgs al;
  auto* align = app.add_subcommand("align", "Learn a mapping artifact from aligned corpora");
  align->add_option("--target-corpus", al.target_corpus)->required();
  align->add_option("--source-corpus", al.source_corpus)->required();
  align->add_option("--alignments", al.alignments)->required();
  align->add_option("--target-side", al.target_side)->check(CLI::IsMember({"left", "right"}));
  align->add_option("--out", al.out)->required();
  align->add_option("--level", al.level)->check(CLI::IsMember({"word", "sense"}));
  align->add_option("--max-vectors", al.max_vectors)->check(CLI::PositiveNumber);
  align->add_option("--min-count", al.min_count);
  align->add_option("--kmin", al.k_min)->check(CLI::PositiveNumber);
  align->add_option("--kmax", al.k_max)->check(CLI::PositiveNumber);
  align->add_option("--min-cluster-size", al.min_cluster_size)->check(CLI::PositiveNumber);
  align->add_option("--max-iters", al.max_iters)->check(CLI::PositiveNumber);
  align->add_option("--in-iters", al.in_iters)->check(CLI::PositiveNumber);
  align->add_flag("--no-in", al.no_in, "Skip iterative normalization");
  align->add_flag("--lowercase,!--no-lowercase", al.lowercase, "Lowercase target types");
  align->add_option("--seed", al.seed);
  align->add_option("--export-anchors", al.export_prefix, "Write anchors as word2vec text");

  std::string ap_artifact, ap_input, ap_out, ap_side = "target";
  auto* apply = app.add_subcommand("apply", "Map vectors through an artifact");
  apply->add_option("--artifact", ap_artifact)->required();
  apply->add_option("--corpus,--input", ap_input)->required();
  apply->add_option("--out", ap_out)->required();
  apply->add_option("--side", ap_side)->check(CLI::IsMember({"target", "source"}));

  std::string an_input, an_csv, an_label;
  std::size_t an_sample = kDefaultAnisotropySample;
  std::uint64_t an_seed = 42;
  auto* aniso = app.add_subcommand("anisotropy", "Mean pairwise cosine of sampled vectors");
  aniso->add_option("--input,--corpus", an_input)->required();
  aniso->add_option("--sample", an_sample)->check(CLI::Range(2ul, 1ul << 40));
  aniso->add_option("--seed", an_seed);
  aniso->add_option("--csv", an_csv);
  aniso->add_option("--label", an_label);

  std::string in_input, in_csv, in_out, in_save, in_load;
  int in_iters = kDefaultInIterations;
  std::size_t in_sample = kDefaultAnisotropySample;
  std::uint64_t in_seed = 42;
  auto* in = app.add_subcommand("in", "Fit or replay iterative normalization");
  in->add_option("--input,--corpus", in_input)->required();
  in->add_option("--iters", in_iters)->check(CLI::PositiveNumber);
  in->add_option("--sample", in_sample)->check(CLI::Range(2ul, 1ul << 40));
  in->add_option("--seed", in_seed);
  in->add_option("--csv", in_csv);
  in->add_option("--out", in_out);
  in->add_option("--save-transform", in_save);
  in->add_option("--load-transform", in_load);

  std::string ev_artifact, ev_truth, ev_csv;
  auto* eval = app.add_subcommand("eval-retrieval", "P@1 / P@5 against a synthetic ground truth");
  eval->add_option("--artifact", ev_artifact)->required();
  eval->add_option("--truth", ev_truth)->required();
  eval->add_option("--csv", ev_csv);

  SynthConfig sc;
  std::string sy_prefix;
  std::string sy_senses;
  auto* synth = app.add_subcommand("synth", "Write a synthetic bilingual bundle");
  synth->add_option("--prefix,--out", sy_prefix)->required();
  synth->add_option("--dim", sc.dim)->check(CLI::Range(2ul, 1ul << 20));
  synth->add_option("--types", sc.n_types)->check(CLI::PositiveNumber);
  synth->add_option("--sentences", sc.n_sentences);
  synth->add_option("--sentence-len", sc.sentence_len)->check(CLI::PositiveNumber);
  synth->add_option("--senses", sy_senses, "Comma-separated P(1 sense), P(2 senses), ...");
  synth->add_option("--noise", sc.noise_sigma)->check(CLI::NonNegativeNumber);
  synth->add_option("--anisotropy-offset", sc.anisotropy_offset_norm)->check(CLI::NonNegativeNumber);
  synth->add_option("--sense-offset", sc.sense_offset_norm)->check(CLI::NonNegativeNumber);
  synth->add_option("--seed", sc.seed);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e2;
    const int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? 0 : 1;
  }

  try {
    set_num_threads(threads);
    if (!kernels_isa.empty()) {
      const auto isa = kernels_isa == "avx2"   ? kernels::Isa::Avx2
                       : kernels_isa == "neon" ? kernels::Isa::Neon
                                               : kernels::Isa::Scalar;
      if (!kernels::set_kernel_isa(isa)) {
        throw Error(ErrorCode::InvalidArgument, "kernel variant " + kernels_isa + " unavailable");
      }
    }
    if (*align) return do_align(al, out);
    if (*apply) return do_apply(ap_artifact, ap_input, ap_out, ap_side, out);
    if (*aniso) return do_anisotropy(an_input, an_sample, an_seed, an_csv, an_label, out);
    if (*in) {
      return do_in(in_input, in_iters, in_sample, in_seed, in_csv, in_out, in_save, in_load, out);
    }
    if (*eval) return do_eval(ev_artifact, ev_truth, ev_csv, out);
    if (*synth) {
      if (!sy_senses.empty()) sc.senses_per_type = parse_distribution(sy_senses);
      const SynthBundle b = generate_synthetic(sc, sy_prefix);
      out << "target " << b.target_corpus << "\n"
          << "source " << b.source_corpus << "\n"
          << "alignments " << b.alignments << "\n"
          << "truth " << b.truth << "\n";
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace xlmap::cli
