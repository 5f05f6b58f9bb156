#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "oaudit/dataset.hpp"
#include "oaudit/matrix.hpp"

namespace oaudit {

// Lowercases ASCII, splits on ASCII non-alphanumerics, keeps bytes >= 0x80
// inside tokens so multi-byte UTF-8 words survive.
std::vector<std::string> tokenize(std::string_view text);

struct Vocabulary {
  struct Term {
    std::string term;
    std::uint32_t document_frequency;
  };
  std::vector<Term> terms;  // sorted lexicographically; position = index
  std::unordered_map<std::string, std::uint32_t> index;
  std::size_t n_docs = 0;
  std::uint32_t min_df = 1;
};

Vocabulary build_vocabulary(const std::vector<std::string>& texts, std::uint32_t min_df);

enum class EmbeddingSource { builtin, external };

struct EmbeddingMatrix {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<double> data;  // row-major
  EmbeddingSource source = EmbeddingSource::builtin;
  std::uint64_t seed = 0;

  double* row(std::size_t i) { return data.data() + i * dim; }
  const double* row(std::size_t i) const { return data.data() + i * dim; }
};

// TF-IDF (tf = raw count, idf = ln(n_docs / (1 + df)) + 1) followed by a
// seeded sparse random projection with entries {-1, 0, +1} at probabilities
// {1/6, 2/3, 1/6} scaled by sqrt(3 / dim), then row L2 normalization.
// Pure function of (texts in id order, dim, seed, min_df); worker count and
// corpus row order cannot change the result.
EmbeddingMatrix embed_corpus(const DatasetTable& table, std::size_t dim, std::uint64_t seed,
                             std::uint32_t min_df, int threads = 1);

// Binary layout: "EMBD" magic, u32le rows, u32le cols, 4 reserved zero bytes,
// then rows*cols IEEE-754 f32le values, row-major.
EmbeddingMatrix load_embeddings(const std::filesystem::path& path, std::size_t expected_rows);
void save_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path);

}  // namespace oaudit
