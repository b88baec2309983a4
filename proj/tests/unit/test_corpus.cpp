#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <set>

#include "test_support.hpp"
#include "xlmap/corpus.hpp"
#include "xlmap/error.hpp"
#include "xlmap/synth.hpp"

namespace xlmap {
namespace {

using testing::TempDir;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

template <class F>
Error capture(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "no error raised";
  return Error(ErrorCode::InvalidArgument, "none");
}

SentenceRecord record(std::uint64_t id, std::vector<std::string> tokens, std::vector<double> flat,
                      std::size_t dim) {
  SentenceRecord r;
  r.id = id;
  r.dim = dim;
  r.tokens = std::move(tokens);
  r.vectors = std::move(flat);
  return r;
}

TEST(ReadCorpus, MinimalFile) {
  TempDir dir;
  const auto path = dir.file("a.tec.jsonl");
  write_text(path, "{\"dim\": 2}\n{\"id\": 0, \"tokens\": [\"la\", \"casa\"], "
                   "\"vectors\": [[1, 2], [3.5, -4e-1]]}\n");
  const auto recs = read_corpus(path);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].id, 0u);
  ASSERT_EQ(recs[0].size(), 2u);
  EXPECT_EQ(recs[0].tokens[1], "casa");
  EXPECT_EQ(recs[0].vector(0)[1], 2.0);
  EXPECT_EQ(recs[0].vector(1)[0], 3.5);
  EXPECT_EQ(recs[0].vector(1)[1], -0.4);
}

TEST(ReadCorpus, WrongVectorLengthNamesLine) {
  TempDir dir;
  const auto path = dir.file("b.tec.jsonl");
  write_text(path, "{\"dim\": 2}\n{\"id\": 0, \"tokens\": [\"x\"], \"vectors\": [[1, 2]]}\n"
                   "{\"id\": 1, \"tokens\": [\"y\"], \"vectors\": [[1, 2, 3]]}\n");
  const Error e = capture([&] { read_corpus(path); });
  EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  EXPECT_NE(std::string(e.what()).find(path + ":3"), std::string::npos) << e.what();
}

TEST(ReadCorpus, FormatErrors) {
  TempDir dir;
  const auto p1 = dir.file("c.tec.jsonl");
  write_text(p1, "{\"dim\": 2}\n{\"id\": 0, \"tokens\": [\"x\"], \"vectors\": [[1, 2]\n");
  EXPECT_EQ(capture([&] { read_corpus(p1); }).code(), ErrorCode::FormatError);

  const auto p2 = dir.file("d.tec.jsonl");
  write_text(p2, "{\"dims\": 2}\n");
  EXPECT_EQ(capture([&] { read_corpus(p2); }).code(), ErrorCode::FormatError);

  const auto p3 = dir.file("e.tec.jsonl");
  write_text(p3, "{\"dim\": 2}\n{\"id\": 0, \"tokens\": [\"x\", \"y\"], \"vectors\": [[1, 2]]}\n");
  EXPECT_EQ(capture([&] { read_corpus(p3); }).code(), ErrorCode::FormatError);

  EXPECT_EQ(capture([&] { read_corpus(dir.file("missing")); }).code(), ErrorCode::IoError);
}

TEST(ReadCorpus, SkipsBlankLinesAndUnknownKeys) {
  TempDir dir;
  const auto path = dir.file("f.tec.jsonl");
  write_text(path, "{\"dim\": 1}\n\n{\"id\": 4, \"lang\": \"es\", \"tokens\": [\"a\"], "
                   "\"vectors\": [[0.25]], \"extra\": {\"k\": [1, 2]}}\n\n");
  const auto recs = read_corpus(path);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].id, 4u);
}

TEST(ReadCorpus, WriterRoundTripIsExact) {
  TempDir dir;
  const auto path = dir.file("g.tec.jsonl");
  std::mt19937_64 gen(3);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<SentenceRecord> written;
  {
    CorpusWriter w(path, 3);
    for (std::uint64_t id = 0; id < 20; ++id) {
      std::vector<double> flat(3 * 4);
      for (double& x : flat) x = n(gen);
      written.push_back(record(id, {"a", "\"q\"", "\xc3\x91o", "b\\c"}, flat, 3));
      w.write(written.back());
    }
    w.close();
  }
  const auto recs = read_corpus(path);
  ASSERT_EQ(recs.size(), written.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(recs[i].id, written[i].id);
    EXPECT_EQ(recs[i].tokens, written[i].tokens);
    EXPECT_EQ(recs[i].vectors, written[i].vectors);
  }
}

TEST(ReadCorpus, SyntheticThousandSentences) {
  TempDir dir;
  SynthConfig cfg;
  cfg.dim = 4;
  cfg.n_types = 30;
  cfg.n_sentences = 1000;
  cfg.sentence_len = 3;
  cfg.seed = 11;
  const auto bundle = generate_synthetic(cfg, dir.file("s"));
  CorpusReader reader(bundle.target_corpus);
  EXPECT_EQ(reader.dim(), 4u);
  std::uint64_t expected = 0;
  while (auto r = reader.next()) {
    EXPECT_EQ(r->id, expected);
    EXPECT_EQ(r->size(), 3u);
    ++expected;
  }
  EXPECT_EQ(expected, 1000u);
}

TEST(Alignments, ParseLines) {
  EXPECT_EQ(parse_alignment_line("0-0 1-1", "x"), (std::vector<Link>{{0, 0}, {1, 1}}));
  EXPECT_TRUE(parse_alignment_line("", "x").empty());
  EXPECT_EQ(parse_alignment_line("2-0 0-1 1-1", "x"), (std::vector<Link>{{2, 0}, {0, 1}, {1, 1}}));
  EXPECT_EQ(parse_alignment_line("  3-4\t5-6 ", "x"), (std::vector<Link>{{3, 4}, {5, 6}}));
  for (const char* bad : {"0-", "-1", "a-b", "0:1", "1-2-3", "-1-2"}) {
    EXPECT_EQ(capture([&] { parse_alignment_line(bad, "x"); }).code(), ErrorCode::FormatError)
        << bad;
  }
}

TEST(Alignments, FileKeepsEmptyLines) {
  TempDir dir;
  const auto path = dir.file("a.align");
  write_text(path, "0-0 1-1\n\n2-0 0-1 1-1\n");
  const auto set = read_alignments(path);
  ASSERT_EQ(set.sentences.size(), 3u);
  EXPECT_TRUE(set.sentences[1].empty());
  EXPECT_EQ(set.sentences[2].size(), 3u);
}

TEST(FilterOneToOne, Examples) {
  const std::vector<Link> a{{0, 0}, {1, 1}};
  EXPECT_EQ(filter_one_to_one(a), a);
  const std::vector<Link> b{{0, 0}, {0, 1}, {1, 2}};
  EXPECT_EQ(filter_one_to_one(b), (std::vector<Link>{{1, 2}}));
  const std::vector<Link> c{{0, 0}, {1, 0}};
  EXPECT_TRUE(filter_one_to_one(c).empty());
}

TEST(FilterOneToOne, RandomSubsetProperty) {
  std::mt19937_64 gen(5);
  std::uniform_int_distribution<std::size_t> idx(0, 7);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Link> links(idx(gen) + idx(gen));
    for (Link& l : links) l = {idx(gen), idx(gen)};
    const auto kept = filter_one_to_one(links);
    std::map<std::size_t, int> ca, cb;
    for (const Link& l : links) {
      ++ca[l.a];
      ++cb[l.b];
    }
    std::vector<Link> oracle;
    for (const Link& l : links)
      if (ca[l.a] == 1 && cb[l.b] == 1) oracle.push_back(l);
    EXPECT_EQ(kept, oracle);
    std::set<std::size_t> sa, sb;
    for (const Link& l : kept) {
      EXPECT_TRUE(sa.insert(l.a).second);
      EXPECT_TRUE(sb.insert(l.b).second);
    }
  }
}

TEST(Lowercase, Scripts) {
  EXPECT_EQ(lowercase_utf8("CasA"), "casa");
  EXPECT_EQ(lowercase_utf8("\xc3\x91" "ANDU"), "\xc3\xb1" "andu");              // Ñ
  EXPECT_EQ(lowercase_utf8("\xce\x91\xce\x92"), "\xce\xb1\xce\xb2");             // ΑΒ
  EXPECT_EQ(lowercase_utf8("\xd0\x94\xd0\x9e\xd0\x9c"), "\xd0\xb4\xd0\xbe\xd0\xbc");  // ДОМ
  EXPECT_EQ(lowercase_utf8("\xd0\x81"), "\xd1\x91");                             // Ё
  EXPECT_EQ(lowercase_utf8("\xc5\x81" "\xc3\x9f"), "\xc5\x82" "\xc3\x9f");        // Łß
  EXPECT_EQ(lowercase_utf8("\xe4\xb8\xad" "1!"), "\xe4\xb8\xad" "1!");
}

TEST(Collect, TwoTokenConstruction) {
  const std::vector<SentenceRecord> t{record(0, {"la", "casa"}, {1, 2, 3, 4}, 2)};
  const std::vector<SentenceRecord> s{record(0, {"the", "house"}, {5, 6, 7, 8}, 2)};
  AlignmentSet al;
  al.sentences.push_back({{0, 0}, {1, 1}});
  const auto coll = collect_type_pairs(t, s, al, {});
  ASSERT_EQ(coll.size(), 2u);
  const TypePairs* la = coll.find("la");
  const TypePairs* casa = coll.find("casa");
  ASSERT_TRUE(la && casa);
  EXPECT_EQ(la->stored, 1u);
  EXPECT_EQ(la->target, (std::vector<double>{1, 2}));
  EXPECT_EQ(la->source, (std::vector<double>{5, 6}));
  EXPECT_EQ(casa->target, (std::vector<double>{3, 4}));
  EXPECT_EQ(casa->source, (std::vector<double>{7, 8}));
}

TEST(Collect, TargetSideRightSwapsLinks) {
  const std::vector<SentenceRecord> t{record(0, {"x", "y", "z"}, {1, 2, 3}, 1)};
  const std::vector<SentenceRecord> s{record(0, {"p", "q"}, {10, 20}, 1)};
  AlignmentSet al;
  al.sentences.push_back({{0, 2}, {1, 0}});
  CollectOptions opt;
  opt.target_side = Side::Right;
  const auto coll = collect_type_pairs(t, s, al, opt);
  EXPECT_EQ(coll.find("z")->source, (std::vector<double>{10}));
  EXPECT_EQ(coll.find("x")->source, (std::vector<double>{20}));
}

TEST(Collect, LowercaseFlag) {
  const std::vector<SentenceRecord> t{record(0, {"Casa", "casa"}, {1, 2}, 1)};
  const std::vector<SentenceRecord> s{record(0, {"a", "b"}, {3, 4}, 1)};
  AlignmentSet al;
  al.sentences.push_back({{0, 0}, {1, 1}});
  EXPECT_EQ(collect_type_pairs(t, s, al, {}).size(), 1u);
  CollectOptions cased;
  cased.lowercase = false;
  EXPECT_EQ(collect_type_pairs(t, s, al, cased).size(), 2u);
}

TEST(Collect, FirstCapKeepsEarliestAndCountsAll) {
  TypeCollection coll(1, 10000);
  for (int i = 0; i < 10500; ++i) {
    const double v = i;
    coll.add("de", std::span<const double>(&v, 1), std::span<const double>(&v, 1));
  }
  const TypePairs* p = coll.find("de");
  ASSERT_NE(p, nullptr);
  EXPECT_EQ(p->stored, 10000u);
  EXPECT_EQ(p->target.size(), 10000u);
  EXPECT_EQ(p->observed, 10500u);
  EXPECT_EQ(p->target.front(), 0.0);
  EXPECT_EQ(p->target.back(), 9999.0);
  EXPECT_EQ(coll.stored_pairs(), 10000u);
}

TEST(Collect, LinkPastSentenceEnd) {
  const std::vector<SentenceRecord> t{record(7, {"a", "b"}, {1, 2}, 1)};
  const std::vector<SentenceRecord> s{record(7, {"c", "d"}, {3, 4}, 1)};
  AlignmentSet al;
  al.sentences.push_back({{5, 0}});
  const Error e = capture([&] { collect_type_pairs(t, s, al, {}); });
  EXPECT_EQ(e.code(), ErrorCode::IndexOutOfRange);
  EXPECT_NE(std::string(e.what()).find("sentence 7"), std::string::npos);
}

TEST(Collect, SentenceCountMismatch) {
  const std::vector<SentenceRecord> t{record(0, {"a"}, {1}, 1), record(1, {"b"}, {1}, 1)};
  const std::vector<SentenceRecord> s{record(0, {"c"}, {3}, 1)};
  AlignmentSet al;
  al.sentences.resize(2);
  EXPECT_EQ(capture([&] { collect_type_pairs(t, s, al, {}); }).code(), ErrorCode::LengthMismatch);

  TempDir dir;
  write_text(dir.file("t"), "{\"dim\":1}\n{\"id\":0,\"tokens\":[\"a\"],\"vectors\":[[1]]}\n"
                            "{\"id\":1,\"tokens\":[\"a\"],\"vectors\":[[1]]}\n");
  write_text(dir.file("s"), "{\"dim\":1}\n{\"id\":0,\"tokens\":[\"a\"],\"vectors\":[[1]]}\n");
  write_text(dir.file("al"), "0-0\n0-0\n");
  CorpusReader rt(dir.file("t")), rs(dir.file("s"));
  AlignmentReader ra(dir.file("al"));
  EXPECT_EQ(capture([&] { collect_type_pairs(rt, rs, ra, {}); }).code(),
            ErrorCode::LengthMismatch);
}

TEST(Collect, StreamingMatchesGeneratorCounts) {
  TempDir dir;
  SynthConfig cfg;
  cfg.dim = 3;
  cfg.n_types = 40;
  cfg.n_sentences = 300;
  cfg.sentence_len = 6;
  cfg.seed = 21;
  const auto bundle = generate_synthetic(cfg, dir.file("s"));

  // Oracle: count target tokens directly from the file.
  std::map<std::string, std::uint64_t> counts;
  for (const auto& r : read_corpus(bundle.target_corpus))
    for (const auto& tok : r.tokens) ++counts[tok];

  CorpusReader t(bundle.target_corpus), s(bundle.source_corpus);
  AlignmentReader a(bundle.alignments);
  CollectOptions opt;
  opt.cap = 25;
  const auto coll = collect_type_pairs(t, s, a, opt);
  ASSERT_EQ(coll.size(), counts.size());
  for (const auto& [type, pairs] : coll.types()) {
    EXPECT_EQ(pairs.observed, counts.at(type)) << type;
    EXPECT_EQ(pairs.stored, std::min<std::uint64_t>(25, counts.at(type)));
    EXPECT_EQ(pairs.target.size(), pairs.stored * 3);
  }

  const auto mem = collect_type_pairs(read_corpus(bundle.target_corpus),
                                      read_corpus(bundle.source_corpus),
                                      read_alignments(bundle.alignments), opt);
  ASSERT_EQ(mem.size(), coll.size());
  for (const auto& [type, pairs] : coll.types()) {
    EXPECT_EQ(mem.find(type)->target, pairs.target);
    EXPECT_EQ(mem.find(type)->source, pairs.source);
  }
}

}  // namespace
}  // namespace xlmap
