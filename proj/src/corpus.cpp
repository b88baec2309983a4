#include "xlmap/corpus.hpp"

#include <charconv>
#include <cmath>
#include <json.hpp>
#include <unordered_map>

#include "format.hpp"
#include "xlmap/error.hpp"

namespace xlmap {
namespace {

using json = nlohmann::json;

std::string at(const std::string& path, std::size_t line) {
  return path + ":" + std::to_string(line);
}

// Streams one record line straight into a SentenceRecord without building a
// DOM. Unknown keys are skipped.
class RecordSax : public json::json_sax_t {
 public:
  explicit RecordSax(SentenceRecord& rec) : rec_(rec) {}

  bool null() override { return scalar("null"); }
  bool boolean(bool) override { return scalar("boolean"); }
  bool number_integer(number_integer_t v) override { return number(static_cast<double>(v), v >= 0, static_cast<std::uint64_t>(v)); }
  bool number_unsigned(number_unsigned_t v) override { return number(static_cast<double>(v), true, v); }
  bool number_float(number_float_t v, const string_t&) override { return number(v, false, 0); }
  bool string(string_t& s) override {
    if (skip_ > 0) return true;
    if (field_ == Field::Tokens && depth_ == 2) {
      rec_.tokens.push_back(std::move(s));
      return true;
    }
    if (depth_ == 1 && field_ == Field::Other) return true;
    return fail("unexpected string");
  }
  bool binary(binary_t&) override { return scalar("binary"); }

  bool start_object(std::size_t) override {
    if (skip_ > 0) {
      ++skip_;
      return true;
    }
    if (depth_ == 0) {
      ++depth_;
      return true;
    }
    if (depth_ == 1 && field_ == Field::Other) {
      skip_ = 1;
      return true;
    }
    return fail("unexpected object");
  }
  bool key(string_t& k) override {
    if (skip_ > 0) return true;
    if (k == "id") {
      field_ = Field::Id;
    } else if (k == "tokens") {
      field_ = Field::Tokens;
    } else if (k == "vectors") {
      field_ = Field::Vectors;
    } else {
      field_ = Field::Other;
    }
    return true;
  }
  bool end_object() override {
    if (skip_ > 0) {
      end_skip();
      return true;
    }
    --depth_;
    return true;
  }
  bool start_array(std::size_t) override {
    if (skip_ > 0) {
      ++skip_;
      return true;
    }
    if (depth_ == 1 && field_ == Field::Other) {
      skip_ = 1;
      return true;
    }
    if (depth_ == 1 && (field_ == Field::Tokens || field_ == Field::Vectors)) {
      ++depth_;
      if (field_ == Field::Tokens) saw_tokens_ = true;
      if (field_ == Field::Vectors) saw_vectors_ = true;
      return true;
    }
    if (depth_ == 2 && field_ == Field::Vectors) {
      ++depth_;
      current_len_ = 0;
      return true;
    }
    return fail("unexpected array");
  }
  bool end_array() override {
    if (skip_ > 0) {
      end_skip();
      return true;
    }
    if (depth_ == 3) {
      lengths_.push_back(current_len_);
    }
    --depth_;
    return true;
  }
  bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception& ex) override {
    message_ = ex.what();
    return false;
  }

  bool saw_id() const { return saw_id_; }
  bool saw_tokens() const { return saw_tokens_; }
  bool saw_vectors() const { return saw_vectors_; }
  const std::vector<std::size_t>& lengths() const { return lengths_; }
  const std::string& message() const { return message_; }

 private:
  enum class Field { None, Id, Tokens, Vectors, Other };

  bool scalar(const char* what) {
    if (skip_ > 0) return true;
    if (depth_ == 1 && field_ == Field::Other) return true;
    return fail(std::string("unexpected ") + what);
  }
  bool number(double v, bool non_negative_int, std::uint64_t as_uint) {
    if (skip_ > 0) return true;
    if (depth_ == 1 && field_ == Field::Id) {
      if (!non_negative_int) return fail("id must be a non-negative integer");
      rec_.id = as_uint;
      saw_id_ = true;
      return true;
    }
    if (depth_ == 1 && field_ == Field::Other) return true;
    if (depth_ == 3 && field_ == Field::Vectors) {
      if (!std::isfinite(v)) return fail("non-finite vector entry");
      rec_.vectors.push_back(v);
      ++current_len_;
      return true;
    }
    return fail("unexpected number");
  }
  void end_skip() { --skip_; }
  bool fail(std::string msg) {
    message_ = std::move(msg);
    return false;
  }

  SentenceRecord& rec_;
  int depth_ = 0;
  int skip_ = 0;
  Field field_ = Field::None;
  bool saw_id_ = false;
  bool saw_tokens_ = false;
  bool saw_vectors_ = false;
  std::size_t current_len_ = 0;
  std::vector<std::size_t> lengths_;
  std::string message_;
};

bool blank(const std::string& s) {
  return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

}  // namespace

CorpusReader::CorpusReader(std::string path) : path_(std::move(path)), in_(path_) {
  if (!in_) throw Error(ErrorCode::IoError, "cannot open corpus " + path_);
  if (!std::getline(in_, buffer_)) {
    throw Error(ErrorCode::FormatError, at(path_, 1) + ": missing header line");
  }
  line_ = 1;
  json header;
  try {
    header = json::parse(buffer_);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, at(path_, 1) + ": malformed header: " + e.what());
  }
  if (!header.is_object() || !header.contains("dim") || !header["dim"].is_number_integer() ||
      header["dim"].get<long long>() <= 0) {
    throw Error(ErrorCode::FormatError, at(path_, 1) + ": header needs a positive integer \"dim\"");
  }
  dim_ = header["dim"].get<std::size_t>();
}

std::optional<SentenceRecord> CorpusReader::next() {
  while (std::getline(in_, buffer_)) {
    ++line_;
    if (blank(buffer_)) continue;

    SentenceRecord rec;
    rec.dim = dim_;
    RecordSax sax(rec);
    const bool ok = json::sax_parse(buffer_, &sax);
    if (!ok) {
      throw Error(ErrorCode::FormatError, at(path_, line_) + ": " + sax.message());
    }
    if (!sax.saw_id() || !sax.saw_tokens() || !sax.saw_vectors()) {
      throw Error(ErrorCode::FormatError,
                  at(path_, line_) + ": record needs \"id\", \"tokens\" and \"vectors\"");
    }
    const auto& lengths = sax.lengths();
    for (std::size_t k = 0; k < lengths.size(); ++k) {
      if (lengths[k] != dim_) {
        throw Error(ErrorCode::DimensionMismatch,
                    at(path_, line_) + ": vector " + std::to_string(k) + " has length " +
                        std::to_string(lengths[k]) + ", header dim is " + std::to_string(dim_));
      }
    }
    if (lengths.size() != rec.tokens.size()) {
      throw Error(ErrorCode::FormatError, at(path_, line_) + ": " +
                                              std::to_string(rec.tokens.size()) + " tokens but " +
                                              std::to_string(lengths.size()) + " vectors");
    }
    return rec;
  }
  if (in_.bad()) throw Error(ErrorCode::IoError, "read failure on " + path_);
  return std::nullopt;
}

std::vector<SentenceRecord> read_corpus(const std::string& path) {
  CorpusReader reader(path);
  std::vector<SentenceRecord> out;
  while (auto rec = reader.next()) out.push_back(std::move(*rec));
  return out;
}

CorpusWriter::CorpusWriter(const std::string& path, std::size_t dim)
    : path_(path), out_(path, std::ios::binary), dim_(dim) {
  if (!out_) throw Error(ErrorCode::IoError, "cannot write " + path);
  out_ << "{\"dim\":" << dim << "}\n";
}

void CorpusWriter::write(const SentenceRecord& record) {
  if (record.vectors.size() != record.tokens.size() * dim_) {
    throw Error(ErrorCode::DimensionMismatch, "record does not match writer dimension");
  }
  line_.clear();
  line_ += "{\"id\":";
  line_ += std::to_string(record.id);
  line_ += ",\"tokens\":";
  line_ += json(record.tokens).dump();
  line_ += ",\"vectors\":[";
  for (std::size_t i = 0; i < record.tokens.size(); ++i) {
    if (i) line_ += ',';
    line_ += '[';
    for (std::size_t k = 0; k < dim_; ++k) {
      if (k) line_ += ',';
      detail::append_double(line_, record.vectors[i * dim_ + k]);
    }
    line_ += ']';
  }
  line_ += "]}\n";
  out_.write(line_.data(), static_cast<std::streamsize>(line_.size()));
  if (!out_) throw Error(ErrorCode::IoError, "write failure on " + path_);
}

void CorpusWriter::close() {
  out_.close();
  if (!out_) throw Error(ErrorCode::IoError, "close failure on " + path_);
}

std::vector<Link> parse_alignment_line(std::string_view line, std::string_view where) {
  std::vector<Link> links;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r')) ++pos;
    if (pos >= line.size()) break;
    std::size_t end = pos;
    while (end < line.size() && line[end] != ' ' && line[end] != '\t' && line[end] != '\r') ++end;
    const std::string_view tok = line.substr(pos, end - pos);
    const auto dash = tok.find('-');
    Link link;
    bool ok = dash != std::string_view::npos && dash > 0 && dash + 1 < tok.size();
    if (ok) {
      const char* first = tok.data();
      auto r1 = std::from_chars(first, first + dash, link.a);
      auto r2 = std::from_chars(first + dash + 1, first + tok.size(), link.b);
      ok = r1.ec == std::errc() && r1.ptr == first + dash && r2.ec == std::errc() &&
           r2.ptr == first + tok.size();
    }
    if (!ok) {
      throw Error(ErrorCode::FormatError,
                  std::string(where) + ": expected \"int-int\", got \"" + std::string(tok) + "\"");
    }
    links.push_back(link);
    pos = end;
  }
  return links;
}

AlignmentReader::AlignmentReader(std::string path) : path_(std::move(path)), in_(path_) {
  if (!in_) throw Error(ErrorCode::IoError, "cannot open alignments " + path_);
}

std::optional<std::vector<Link>> AlignmentReader::next() {
  if (!std::getline(in_, buffer_)) {
    if (in_.bad()) throw Error(ErrorCode::IoError, "read failure on " + path_);
    return std::nullopt;
  }
  ++line_;
  return parse_alignment_line(buffer_, at(path_, line_));
}

AlignmentSet read_alignments(const std::string& path) {
  AlignmentReader reader(path);
  AlignmentSet set;
  while (auto links = reader.next()) set.sentences.push_back(std::move(*links));
  return set;
}

std::vector<Link> filter_one_to_one(std::span<const Link> links) {
  std::unordered_map<std::size_t, int> a_count;
  std::unordered_map<std::size_t, int> b_count;
  for (const Link& l : links) {
    ++a_count[l.a];
    ++b_count[l.b];
  }
  std::vector<Link> out;
  for (const Link& l : links) {
    if (a_count[l.a] == 1 && b_count[l.b] == 1) out.push_back(l);
  }
  return out;
}

namespace {

char32_t lower_codepoint(char32_t c) {
  if (c < 0x80) return (c >= 'A' && c <= 'Z') ? c + 32 : c;
  // Latin-1 supplement
  if ((c >= 0xC0 && c <= 0xDE) && c != 0xD7) return c + 32;
  // Latin Extended-A: even/odd case pairs, with the 0x139..0x148 and
  // 0x179..0x17E ranges offset by one.
  if (c >= 0x100 && c <= 0x137) return (c % 2 == 0) ? c + 1 : c;
  if (c >= 0x139 && c <= 0x148) return (c % 2 == 1) ? c + 1 : c;
  if (c >= 0x14A && c <= 0x177) return (c % 2 == 0) ? c + 1 : c;
  if (c == 0x178) return 0xFF;
  if (c >= 0x179 && c <= 0x17E) return (c % 2 == 1) ? c + 1 : c;
  // Greek
  if (c >= 0x391 && c <= 0x3AB && c != 0x3A2) return c + 32;
  if (c == 0x386) return 0x3AC;
  if (c >= 0x388 && c <= 0x38A) return c + 37;
  if (c == 0x38C) return 0x3CC;
  if (c == 0x38E || c == 0x38F) return c + 63;
  // Cyrillic
  if (c >= 0x410 && c <= 0x42F) return c + 32;
  if (c >= 0x400 && c <= 0x40F) return c + 80;
  return c;
}

void append_utf8(std::string& out, char32_t c) {
  if (c < 0x80) {
    out += static_cast<char>(c);
  } else if (c < 0x800) {
    out += static_cast<char>(0xC0 | (c >> 6));
    out += static_cast<char>(0x80 | (c & 0x3F));
  } else if (c < 0x10000) {
    out += static_cast<char>(0xE0 | (c >> 12));
    out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (c & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (c >> 18));
    out += static_cast<char>(0x80 | ((c >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (c & 0x3F));
  }
}

}  // namespace

std::string lowercase_utf8(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    char32_t c = b0;
    if (b0 >= 0xF0) {
      len = 4;
      c = b0 & 0x07;
    } else if (b0 >= 0xE0) {
      len = 3;
      c = b0 & 0x0F;
    } else if (b0 >= 0xC0) {
      len = 2;
      c = b0 & 0x1F;
    }
    if (len > 1) {
      bool valid = i + len <= s.size();
      for (std::size_t k = 1; valid && k < len; ++k) {
        const auto bk = static_cast<unsigned char>(s[i + k]);
        if ((bk & 0xC0) != 0x80) valid = false;
        c = (c << 6) | (bk & 0x3F);
      }
      if (!valid) {
        // Pass malformed bytes through untouched.
        out += s[i];
        ++i;
        continue;
      }
    }
    append_utf8(out, lower_codepoint(c));
    i += len;
  }
  return out;
}

TypeCollection::TypeCollection(std::size_t dim, std::size_t cap) : dim_(dim), cap_(cap) {
  if (cap_ == 0) throw Error(ErrorCode::InvalidArgument, "cap must be positive");
}

void TypeCollection::add(std::string_view type, std::span<const double> target,
                         std::span<const double> source) {
  if (target.size() != dim_ || source.size() != dim_) {
    throw Error(ErrorCode::DimensionMismatch, "pair vector length does not match collection dim");
  }
  auto it = types_.find(type);
  if (it == types_.end()) it = types_.emplace(std::string(type), TypePairs{}).first;
  TypePairs& pairs = it->second;
  ++pairs.observed;
  if (pairs.stored < cap_) {
    pairs.target.insert(pairs.target.end(), target.begin(), target.end());
    pairs.source.insert(pairs.source.end(), source.begin(), source.end());
    ++pairs.stored;
  }
}

const TypePairs* TypeCollection::find(std::string_view type) const {
  auto it = types_.find(type);
  return it == types_.end() ? nullptr : &it->second;
}

std::size_t TypeCollection::stored_pairs() const {
  std::size_t n = 0;
  for (const auto& [_, p] : types_) n += p.stored;
  return n;
}

namespace {

void collect_sentence(TypeCollection& coll, const SentenceRecord& t, const SentenceRecord& s,
                      std::vector<Link> links, const CollectOptions& options,
                      std::size_t sentence_index) {
  if (options.target_side == Side::Right) {
    for (Link& l : links) std::swap(l.a, l.b);
  }
  for (const Link& l : filter_one_to_one(links)) {
    if (l.a >= t.size() || l.b >= s.size()) {
      throw Error(ErrorCode::IndexOutOfRange,
                  "sentence " + std::to_string(t.id) + " (record " +
                      std::to_string(sentence_index) + "): link " + std::to_string(l.a) + "-" +
                      std::to_string(l.b) + " exceeds lengths " + std::to_string(t.size()) + "/" +
                      std::to_string(s.size()));
    }
    const std::string& token = t.tokens[l.a];
    if (options.lowercase) {
      coll.add(lowercase_utf8(token), t.vector(l.a), s.vector(l.b));
    } else {
      coll.add(token, t.vector(l.a), s.vector(l.b));
    }
  }
}

}  // namespace

TypeCollection collect_type_pairs(CorpusReader& target, CorpusReader& source,
                                  AlignmentReader& alignments, const CollectOptions& options) {
  if (target.dim() != source.dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "target dim " + std::to_string(target.dim()) + " differs from source dim " +
                    std::to_string(source.dim()));
  }
  TypeCollection coll(target.dim(), options.cap);
  for (std::size_t k = 0;; ++k) {
    auto t = target.next();
    auto s = source.next();
    auto links = alignments.next();
    if (!t && !s && !links) break;
    if (!t || !s || !links) {
      throw Error(ErrorCode::LengthMismatch,
                  "inputs end at different sentence counts (after " + std::to_string(k) +
                      " sentences): " + target.path() + ", " + source.path() + ", " +
                      alignments.path());
    }
    collect_sentence(coll, *t, *s, std::move(*links), options, k);
  }
  return coll;
}

TypeCollection collect_type_pairs(std::span<const SentenceRecord> target,
                                  std::span<const SentenceRecord> source,
                                  const AlignmentSet& alignments, const CollectOptions& options) {
  if (target.size() != source.size() || target.size() != alignments.sentences.size()) {
    throw Error(ErrorCode::LengthMismatch, "target, source and alignments have " +
                                               std::to_string(target.size()) + ", " +
                                               std::to_string(source.size()) + " and " +
                                               std::to_string(alignments.sentences.size()) +
                                               " sentences");
  }
  const std::size_t dim = target.empty() ? 0 : target.front().dim;
  if (!source.empty() && source.front().dim != dim) {
    throw Error(ErrorCode::DimensionMismatch, "target and source dimensions differ");
  }
  TypeCollection coll(dim, options.cap);
  for (std::size_t k = 0; k < target.size(); ++k) {
    collect_sentence(coll, target[k], source[k], alignments.sentences[k], options, k);
  }
  return coll;
}

}  // namespace xlmap
