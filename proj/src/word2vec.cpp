#include "xlmap/word2vec.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "format.hpp"
#include "xlmap/error.hpp"

namespace xlmap {

void write_word2vec(const std::string& path, const EmbeddingMatrix& m) {
  if (m.labels().size() != m.count()) {
    throw Error(ErrorCode::InvalidArgument, "word2vec output needs a label per column");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  std::string line = std::to_string(m.count()) + " " + std::to_string(m.dim()) + "\n";
  out << line;
  for (std::size_t j = 0; j < m.count(); ++j) {
    line = m.label(j);
    for (double v : m.column(j)) {
      line += ' ';
      detail::append_double(line, v);
    }
    line += '\n';
    out << line;
  }
  if (!out) throw Error(ErrorCode::IoError, "write failure on " + path);
}

EmbeddingMatrix read_word2vec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::string line;
  std::size_t n = 0;
  std::size_t d = 0;
  if (!std::getline(in, line) || !(std::istringstream(line) >> n >> d) || d == 0) {
    throw Error(ErrorCode::FormatError, path + ":1: expected \"N d\" header");
  }
  std::vector<double> values;
  values.reserve(n * d);
  std::vector<std::string> labels;
  labels.reserve(n);
  std::size_t lineno = 1;
  while (labels.size() < n && std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const char* p = line.data();
    const char* end = p + line.size();
    while (p < end && (*p == ' ' || *p == '\t')) ++p;
    const char* label_end = p;
    while (label_end < end && *label_end != ' ' && *label_end != '\t') ++label_end;
    labels.emplace_back(p, label_end);
    p = label_end;
    std::size_t got = 0;
    for (;;) {
      while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
      if (p >= end) break;
      double v = 0.0;
      auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc() || !std::isfinite(v)) {
        throw Error(ErrorCode::FormatError,
                    path + ":" + std::to_string(lineno) + ": bad number in vector");
      }
      values.push_back(v);
      ++got;
      p = res.ptr;
    }
    if (got != d) {
      throw Error(ErrorCode::DimensionMismatch, path + ":" + std::to_string(lineno) + ": " +
                                                    std::to_string(got) + " values, expected " +
                                                    std::to_string(d));
    }
  }
  if (labels.size() != n) {
    throw Error(ErrorCode::FormatError, path + ": header promises " + std::to_string(n) +
                                            " vectors, found " + std::to_string(labels.size()));
  }
  return EmbeddingMatrix(d, n, std::move(values), std::move(labels));
}

}  // namespace xlmap
