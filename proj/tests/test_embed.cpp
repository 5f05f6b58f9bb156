#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "oaudit/embed.hpp"
#include "oaudit/errors.hpp"
#include "testutil.hpp"

using namespace oaudit;

namespace {

DatasetTable text_table(const std::vector<std::string>& texts) {
  std::vector<AttributeChannel> schema{{"toxicity", ChannelKind::toxicity_annotation, "", ""}};
  std::vector<std::int64_t> ids(texts.size());
  std::iota(ids.begin(), ids.end(), 0);
  return DatasetTable::from_columns(std::move(ids), texts, schema,
                                    {std::vector<double>(texts.size(), 0.0)});
}

double row_norm(const EmbeddingMatrix& m, std::size_t r) {
  double s = 0.0;
  for (std::size_t j = 0; j < m.dim; ++j) s += m.row(r)[j] * m.row(r)[j];
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("tokenize lowercases and splits on non-alphanumerics") {
  CHECK(tokenize("Hello, World!") == std::vector<std::string>{"hello", "world"});
  CHECK(tokenize("") == std::vector<std::string>{});
  CHECK(tokenize("state-of-the-art AI") == std::vector<std::string>{"state", "of", "the", "art", "ai"});
  CHECK(tokenize("a1-b2") == std::vector<std::string>{"a1", "b2"});
  CHECK(tokenize("  \t\n ") == std::vector<std::string>{});
}

TEST_CASE("tokenize keeps multi-byte UTF-8 sequences inside tokens") {
  const auto toks = tokenize("caf\xc3\xa9 bar");
  REQUIRE(toks.size() == 2);
  CHECK(toks[0] == "caf\xc3\xa9");
}

TEST_CASE("vocabulary: sorted terms, dense indices, min_df filter") {
  Vocabulary v = build_vocabulary({"b a", "b c", "b a"}, 2);
  REQUIRE(v.terms.size() == 2);  // "a" (df 2) and "b" (df 3); "c" dropped
  CHECK(v.terms[0].term == "a");
  CHECK(v.terms[1].term == "b");
  CHECK(v.terms[0].document_frequency == 2);
  CHECK(v.terms[1].document_frequency == 3);
  CHECK(v.index.at("a") == 0);
  CHECK(v.index.at("b") == 1);
  CHECK(v.n_docs == 3);
}

TEST_CASE("embed_corpus: identical texts produce identical rows") {
  std::vector<std::string> texts(6, "repeat me twice");
  texts[3] = "different thing entirely";
  DatasetTable t = text_table(texts);
  EmbeddingMatrix m = embed_corpus(t, 16, 9, 1);
  for (std::size_t j = 0; j < m.dim; ++j) {
    CHECK(m.row(0)[j] == m.row(1)[j]);
    CHECK(m.row(0)[j] == m.row(2)[j]);
  }
}

TEST_CASE("embed_corpus: empty or out-of-vocabulary text yields a zero row") {
  DatasetTable t = text_table({"", "covered covered", "covered words", "unique1 unique2"});
  EmbeddingMatrix m = embed_corpus(t, 8, 3, 2);  // min_df 2: unique tokens drop out
  CHECK(row_norm(m, 0) == 0.0);
  CHECK(row_norm(m, 3) == 0.0);
  CHECK(row_norm(m, 1) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("embed_corpus: rows with in-vocabulary tokens are unit-norm within 1e-9") {
  std::vector<std::string> texts;
  std::mt19937 rng(4);
  for (int i = 0; i < 60; ++i) {
    std::string s = "base";
    for (int w = 0; w < 8; ++w) s += " w" + std::to_string(rng() % 30);
    texts.push_back(s);
  }
  DatasetTable t = text_table(texts);
  EmbeddingMatrix m = embed_corpus(t, 64, 12, 2);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double norm = row_norm(m, r);
    if (norm > 0.0) CHECK(std::abs(norm - 1.0) <= 1e-9);
  }
}

TEST_CASE("embed_corpus: deterministic, thread-count independent, seed sensitive") {
  std::vector<std::string> texts;
  for (int i = 0; i < 40; ++i) texts.push_back("tok" + std::to_string(i % 7) + " shared words here");
  DatasetTable t = text_table(texts);
  EmbeddingMatrix a = embed_corpus(t, 32, 5, 1, 1);
  EmbeddingMatrix b = embed_corpus(t, 32, 5, 1, 4);
  CHECK(a.data == b.data);
  EmbeddingMatrix c = embed_corpus(t, 32, 6, 1, 1);
  CHECK(a.data != c.data);
}

TEST_CASE("embed_corpus: permuting rows permutes the output and nothing else") {
  std::vector<std::string> texts;
  std::mt19937 rng(11);
  for (int i = 0; i < 25; ++i) {
    std::string s;
    for (int w = 0; w < 6; ++w) s += " v" + std::to_string(rng() % 12);
    texts.push_back(s);
  }
  DatasetTable t = text_table(texts);
  EmbeddingMatrix base = embed_corpus(t, 16, 21, 1);

  std::vector<std::size_t> perm(texts.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937(3));
  std::vector<std::string> shuffled(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) shuffled[i] = texts[perm[i]];
  EmbeddingMatrix moved = embed_corpus(text_table(shuffled), 16, 21, 1);

  for (std::size_t i = 0; i < texts.size(); ++i) {
    for (std::size_t j = 0; j < base.dim; ++j) {
      CHECK(moved.row(i)[j] == base.row(perm[i])[j]);  // bitwise
    }
  }
}

TEST_CASE("embed_corpus validates its configuration") {
  DatasetTable t = text_table({"a"});
  CHECK_THROWS_AS(embed_corpus(t, 1, 0, 1), Error);
  CHECK_THROWS_AS(embed_corpus(t, 8, 0, 0), Error);
}

TEST_CASE("embedding file format: header arithmetic") {
  testutil::TempDir tmp("embd");
  EmbeddingMatrix empty;
  empty.rows = 0;
  empty.dim = 7;
  const auto p0 = tmp.path() / "empty.embd";
  save_embeddings(empty, p0);
  CHECK(std::filesystem::file_size(p0) == 16);

  EmbeddingMatrix m;
  m.rows = 2;
  m.dim = 3;
  m.data = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  const auto p1 = tmp.path() / "m.embd";
  save_embeddings(m, p1);
  CHECK(std::filesystem::file_size(p1) == 16 + 24);

  EmbeddingMatrix loaded = load_embeddings(p1, 2);
  REQUIRE(loaded.rows == 2);
  REQUIRE(loaded.dim == 3);
  CHECK(loaded.source == EmbeddingSource::external);
  CHECK(loaded.data == m.data);  // these values are exact in f32
}

TEST_CASE("embedding file format: errors") {
  testutil::TempDir tmp("embd2");
  const auto path = tmp.path() / "bad.embd";

  std::ofstream(path, std::ios::binary) << "NOPE";
  CHECK_THROWS_AS(load_embeddings(path, 0), Error);

  EmbeddingMatrix m;
  m.rows = 5;
  m.dim = 2;
  m.data.assign(10, 0.5);
  save_embeddings(m, path);
  CHECK_THROWS_AS(load_embeddings(path, 4), Error);  // row-count mismatch

  // Truncate the payload.
  std::filesystem::resize_file(path, 16 + 5);
  CHECK_THROWS_AS(load_embeddings(path, 5), Error);
}

TEST_CASE("embedding file round-trip is bit-exact at f32 resolution") {
  testutil::TempDir tmp("embd3");
  std::mt19937 rng(1234);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  EmbeddingMatrix m;
  m.rows = 50;
  m.dim = 64;
  m.data.resize(50 * 64);
  for (auto& v : m.data) v = static_cast<double>(static_cast<float>(dist(rng)));

  const auto p1 = tmp.path() / "a.embd";
  const auto p2 = tmp.path() / "b.embd";
  save_embeddings(m, p1);
  EmbeddingMatrix loaded = load_embeddings(p1, 50);
  CHECK(loaded.data == m.data);  // inputs were f32-representable
  save_embeddings(loaded, p2);

  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  std::string s1((std::istreambuf_iterator<char>(f1)), {});
  std::string s2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(s1 == s2);
}
