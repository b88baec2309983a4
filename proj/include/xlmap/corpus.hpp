#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace xlmap {

inline constexpr std::size_t kDefaultCap = 10000;

/// One sentence of a token-embedding corpus. Vectors are stored back to back.
struct SentenceRecord {
  std::uint64_t id = 0;
  std::size_t dim = 0;
  std::vector<std::string> tokens;
  std::vector<double> vectors;

  std::size_t size() const noexcept { return tokens.size(); }
  std::span<const double> vector(std::size_t i) const { return {vectors.data() + i * dim, dim}; }
};

/// Streaming reader for ".tec.jsonl" files: a header line {"dim": d} followed
/// by one {"id", "tokens", "vectors"} object per line.
class CorpusReader {
 public:
  explicit CorpusReader(std::string path);

  std::size_t dim() const noexcept { return dim_; }
  const std::string& path() const noexcept { return path_; }
  /// 1-based line number of the most recently returned record.
  std::size_t line() const noexcept { return line_; }

  std::optional<SentenceRecord> next();

 private:
  std::string path_;
  std::ifstream in_;
  std::size_t dim_ = 0;
  std::size_t line_ = 0;
  std::string buffer_;
};

std::vector<SentenceRecord> read_corpus(const std::string& path);

/// Writes ".tec.jsonl" with shortest round-trip decimal formatting.
class CorpusWriter {
 public:
  CorpusWriter(const std::string& path, std::size_t dim);
  void write(const SentenceRecord& record);
  void close();

 private:
  std::string path_;
  std::ofstream out_;
  std::size_t dim_;
  std::string line_;
};

/// One alignment link: `a` indexes the target sentence, `b` the source one.
struct Link {
  std::size_t a = 0;
  std::size_t b = 0;
  bool operator==(const Link&) const = default;
};

struct AlignmentSet {
  std::vector<std::vector<Link>> sentences;
};

/// Parses one Pharaoh-format line ("0-0 1-2 ..."). `where` is used in errors.
std::vector<Link> parse_alignment_line(std::string_view line, std::string_view where);

class AlignmentReader {
 public:
  explicit AlignmentReader(std::string path);
  std::optional<std::vector<Link>> next();
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
  std::size_t line_ = 0;
  std::string buffer_;
};

AlignmentSet read_alignments(const std::string& path);

/// Keeps links whose target and source index each occur exactly once.
std::vector<Link> filter_one_to_one(std::span<const Link> links);

/// Simple Unicode lowercasing for Latin, Greek and Cyrillic scripts.
std::string lowercase_utf8(std::string_view s);

/// Paired vectors harvested for one target type, stored back to back.
struct TypePairs {
  std::vector<double> target;
  std::vector<double> source;
  std::size_t stored = 0;
  std::uint64_t observed = 0;
};

class TypeCollection {
 public:
  TypeCollection(std::size_t dim, std::size_t cap);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t cap() const noexcept { return cap_; }
  std::size_t size() const noexcept { return types_.size(); }
  bool empty() const noexcept { return types_.empty(); }

  /// Records one observation; the pair is stored only while under the cap.
  void add(std::string_view type, std::span<const double> target, std::span<const double> source);

  /// Types in lexicographic order.
  const std::map<std::string, TypePairs, std::less<>>& types() const noexcept { return types_; }
  std::map<std::string, TypePairs, std::less<>>& mutable_types() noexcept { return types_; }
  const TypePairs* find(std::string_view type) const;

  std::size_t stored_pairs() const;

 private:
  std::size_t dim_;
  std::size_t cap_;
  std::map<std::string, TypePairs, std::less<>> types_;
};

enum class Side { Left, Right };

struct CollectOptions {
  std::size_t cap = kDefaultCap;
  bool lowercase = true;
  /// Which side of each "a-b" link refers to the target corpus.
  Side target_side = Side::Left;
};

/// Walks the three streams in lockstep and keeps the first `cap` pairs per
/// target type from one-to-one links.
TypeCollection collect_type_pairs(CorpusReader& target, CorpusReader& source,
                                  AlignmentReader& alignments, const CollectOptions& options);

/// In-memory variant over already-loaded records.
TypeCollection collect_type_pairs(std::span<const SentenceRecord> target,
                                  std::span<const SentenceRecord> source,
                                  const AlignmentSet& alignments, const CollectOptions& options);

}  // namespace xlmap
