#include "oaudit/embed.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

#include "oaudit/errors.hpp"
#include "oaudit/parallel.hpp"
#include "oaudit/rng.hpp"
#include "oaudit/util.hpp"

namespace oaudit {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    bool keep = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c >= 0x80;
    if (c >= 'A' && c <= 'Z') {
      current.push_back(static_cast<char>(c - 'A' + 'a'));
      continue;
    }
    if (keep) {
      current.push_back(static_cast<char>(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Vocabulary build_vocabulary(const std::vector<std::string>& texts, std::uint32_t min_df) {
  if (min_df < 1) fail(errc::config, "min_df must be >= 1");
  // std::map keeps terms sorted, making index assignment independent of
  // document order.
  std::map<std::string, std::uint32_t> df;
  std::vector<std::string> doc_terms;
  for (const auto& text : texts) {
    doc_terms = tokenize(text);
    std::sort(doc_terms.begin(), doc_terms.end());
    doc_terms.erase(std::unique(doc_terms.begin(), doc_terms.end()), doc_terms.end());
    for (auto& t : doc_terms) ++df[t];
  }
  Vocabulary vocab;
  vocab.n_docs = texts.size();
  vocab.min_df = min_df;
  for (auto& [term, count] : df) {
    if (count < min_df) continue;
    vocab.index.emplace(term, static_cast<std::uint32_t>(vocab.terms.size()));
    vocab.terms.push_back({term, count});
  }
  return vocab;
}

namespace {

// Sparse projection row for one vocabulary term: (component, sign) pairs.
// Keyed by the term string itself, so the projection depends only on the
// vocabulary contents, not on index assignment or corpus order.
std::vector<std::pair<std::uint32_t, std::int8_t>> projection_row(std::uint64_t seed,
                                                                  const std::string& term,
                                                                  std::size_t dim) {
  std::vector<std::pair<std::uint32_t, std::int8_t>> row;
  Rng rng = Rng::keyed(seed, term);
  for (std::size_t t = 0; t < dim; ++t) {
    std::uint64_t bucket = rng.below(6);
    if (bucket == 0) row.emplace_back(static_cast<std::uint32_t>(t), std::int8_t{1});
    else if (bucket == 1) row.emplace_back(static_cast<std::uint32_t>(t), std::int8_t{-1});
  }
  return row;
}

}  // namespace

EmbeddingMatrix embed_corpus(const DatasetTable& table, std::size_t dim, std::uint64_t seed,
                             std::uint32_t min_df, int threads) {
  if (dim < 2) fail(errc::config, "embedding dim must be >= 2");
  if (min_df < 1) fail(errc::config, "min_df must be >= 1");

  const std::size_t n = table.n_rows();
  std::vector<std::string> texts;
  texts.reserve(n);
  for (std::size_t r = 0; r < n; ++r) texts.push_back(table.text(r));

  Vocabulary vocab = build_vocabulary(texts, min_df);

  std::vector<double> idf(vocab.terms.size());
  for (std::size_t i = 0; i < vocab.terms.size(); ++i) {
    idf[i] = std::log(static_cast<double>(vocab.n_docs) /
                      (1.0 + static_cast<double>(vocab.terms[i].document_frequency))) +
             1.0;
  }

  std::vector<std::vector<std::pair<std::uint32_t, std::int8_t>>> projection(vocab.terms.size());
  for (std::size_t i = 0; i < vocab.terms.size(); ++i) {
    projection[i] = projection_row(seed, vocab.terms[i].term, dim);
  }
  const double scale = std::sqrt(3.0 / static_cast<double>(dim));

  EmbeddingMatrix out;
  out.rows = n;
  out.dim = dim;
  out.seed = seed;
  out.source = EmbeddingSource::builtin;
  out.data.assign(n * dim, 0.0);

  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    std::unordered_map<std::uint32_t, double> tf;
    for (std::size_t r = begin; r < end; ++r) {
      tf.clear();
      for (const auto& tok : tokenize(texts[r])) {
        auto it = vocab.index.find(tok);
        if (it != vocab.index.end()) tf[it->second] += 1.0;
      }
      double* row = out.row(r);
      // Accumulate in ascending term index order; summation order must not
      // depend on hash-map iteration.
      std::vector<std::pair<std::uint32_t, double>> entries(tf.begin(), tf.end());
      std::sort(entries.begin(), entries.end());
      for (const auto& [term_idx, count] : entries) {
        const double weight = count * idf[term_idx] * scale;
        for (const auto& [component, sign] : projection[term_idx]) {
          row[component] += sign > 0 ? weight : -weight;
        }
      }
      double norm_sq = 0.0;
      for (std::size_t t = 0; t < dim; ++t) norm_sq += row[t] * row[t];
      if (norm_sq > 0.0) {
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (std::size_t t = 0; t < dim; ++t) row[t] *= inv;
      }
    }
  });
  return out;
}

namespace {

void put_u32le(std::string& buf, std::uint32_t v) {
  buf.push_back(static_cast<char>(v & 0xff));
  buf.push_back(static_cast<char>((v >> 8) & 0xff));
  buf.push_back(static_cast<char>((v >> 16) & 0xff));
  buf.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t get_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void save_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
  std::string buf;
  buf.reserve(16 + matrix.rows * matrix.dim * 4);
  buf += "EMBD";
  put_u32le(buf, static_cast<std::uint32_t>(matrix.rows));
  put_u32le(buf, static_cast<std::uint32_t>(matrix.dim));
  put_u32le(buf, 0);
  for (double v : matrix.data) {
    const float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32le(buf, bits);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(errc::io, "cannot open " + path.string() + " for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  out.close();
  if (out.fail()) fail(errc::io, "write failure on " + path.string());
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path, std::size_t expected_rows) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::io, "cannot open " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) fail(errc::io, "read failure on " + path.string());

  const auto* bytes = reinterpret_cast<const unsigned char*>(buf.data());
  if (buf.size() < 16 || std::memcmp(bytes, "EMBD", 4) != 0) {
    fail(errc::format, path.string() + ": bad magic, not an embedding file");
  }
  const std::uint32_t rows = get_u32le(bytes + 4);
  const std::uint32_t cols = get_u32le(bytes + 8);
  if (get_u32le(bytes + 12) != 0) fail(errc::format, path.string() + ": reserved header bytes must be zero");
  const std::size_t payload = static_cast<std::size_t>(rows) * cols * 4;
  if (buf.size() != 16 + payload) {
    fail(errc::format, path.string() + ": payload is " + std::to_string(buf.size() - 16) +
                           " bytes, header implies " + std::to_string(payload));
  }
  if (rows != expected_rows) {
    fail(errc::format, path.string() + ": file has " + std::to_string(rows) + " rows, expected " +
                           std::to_string(expected_rows));
  }

  EmbeddingMatrix m;
  m.rows = rows;
  m.dim = cols;
  m.source = EmbeddingSource::external;
  m.data.resize(static_cast<std::size_t>(rows) * cols);
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    const std::uint32_t bits = get_u32le(bytes + 16 + i * 4);
    float f;
    std::memcpy(&f, &bits, 4);
    if (!std::isfinite(f)) fail(errc::format, path.string() + ": non-finite value at element " + std::to_string(i));
    m.data[i] = static_cast<double>(f);
  }
  return m;
}

}  // namespace oaudit
