#pragma once

#include <string>

#include "xlmap/linalg.hpp"

namespace xlmap {

/// word2vec text format: "N d" header, then "label v1 ... vd" per line.
void write_word2vec(const std::string& path, const EmbeddingMatrix& m);
EmbeddingMatrix read_word2vec(const std::string& path);

}  // namespace xlmap
