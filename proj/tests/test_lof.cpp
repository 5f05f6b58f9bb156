#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oaudit/errors.hpp"
#include "oaudit/lof.hpp"
#include "testutil.hpp"

using namespace oaudit;

namespace {

Matrix from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m.at(i, j) = rows[i][j];
  }
  return m;
}

}  // namespace

TEST_CASE("knn on three collinear points") {
  Matrix pts = from_rows({{0.0}, {1.0}, {3.0}});
  auto nb = knn(pts, 1);
  CHECK(nb[0].k_distance == doctest::Approx(1.0));
  CHECK(nb[1].k_distance == doctest::Approx(1.0));
  CHECK(nb[2].k_distance == doctest::Approx(2.0));
  CHECK(nb[0].ids == std::vector<std::uint32_t>{1});
  CHECK(nb[2].ids == std::vector<std::uint32_t>{1});
}

TEST_CASE("knn with k = n-1 reaches every other point") {
  Matrix pts = testutil::random_matrix(12, 3, 99);
  auto nb = knn(pts, 11);
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(nb[i].ids.size() == 11);
    CHECK(std::find(nb[i].ids.begin(), nb[i].ids.end(), i) == nb[i].ids.end());
  }
}

TEST_CASE("knn on a square: edge-adjacent corners at k=2, ties included") {
  Matrix pts = from_rows({{0, 0}, {1, 0}, {0, 1}, {1, 1}});
  auto nb = knn(pts, 2);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(nb[i].k_distance == doctest::Approx(1.0));
    REQUIRE(nb[i].ids.size() == 2);  // the diagonal is strictly farther
  }
  CHECK(nb[0].ids == std::vector<std::uint32_t>{1, 2});
  CHECK(nb[3].ids == std::vector<std::uint32_t>{1, 2});
}

TEST_CASE("knn neighborhood exceeds k under distance ties") {
  // Center of a cross: four neighbors all at distance 1, k = 2.
  Matrix pts = from_rows({{0, 0}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}});
  auto nb = knn(pts, 2);
  CHECK(nb[0].k_distance == doctest::Approx(1.0));
  CHECK(nb[0].ids.size() == 4);
}

TEST_CASE("knn rejects k >= n") {
  Matrix pts = testutil::random_matrix(5, 2, 1);
  CHECK_THROWS_AS(knn(pts, 5), Error);
  CHECK_THROWS_AS(lof_scores(pts, 5), Error);
}

TEST_CASE("lof: interior of a uniform grid scores near -1") {
  Matrix pts(100, 1);
  for (std::size_t i = 0; i < 100; ++i) pts.at(i, 0) = static_cast<double>(i);
  auto scores = lof_scores(pts, 5);
  for (std::size_t i = 10; i < 90; ++i) {
    CHECK(scores[i] <= -0.95);
    CHECK(scores[i] >= -1.05);
  }
}

TEST_CASE("lof: a far point in a tight cluster has the minimum score") {
  std::vector<std::vector<double>> rows;
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> dist(0.0, 0.1);
  for (int i = 0; i < 20; ++i) rows.push_back({dist(rng), dist(rng)});
  rows.push_back({10.0, 10.0});
  Matrix pts = from_rows(rows);
  auto scores = lof_scores(pts, 3);
  const auto min_it = std::min_element(scores.begin(), scores.end());
  CHECK(static_cast<std::size_t>(min_it - scores.begin()) == 20);
}

TEST_CASE("lof: all points identical stays finite and equal (epsilon guard)") {
  Matrix pts(40, 3);
  for (auto& v : pts.data) v = 0.25;
  auto scores = lof_scores(pts, 5);
  for (double s : scores) {
    CHECK(std::isfinite(s));
    CHECK(s == scores[0]);
  }
  // Thresholding still flags exactly m lowest-id records.
  auto result = threshold_by_contamination(scores, 0.1);
  CHECK(result.flagged_count() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(result.flags[i] == 1);
}

TEST_CASE("lof matches the quadratic-time reference oracle") {
  std::mt19937 seeds(12345);
  for (int rep = 0; rep < 25; ++rep) {
    const std::size_t n = 30 + seeds() % 120;
    const std::size_t dims[] = {2, 24, 64};
    const std::size_t d = dims[rep % 3];
    const std::size_t ks[] = {2, 5, 10};
    const std::size_t k = ks[(rep / 3) % 3];
    Matrix pts = testutil::random_matrix(n, d, seeds());

    const auto ref = testutil::lof_reference(pts, k);
    const auto got = lof_scores(pts, k, 2);
    REQUIRE(got.size() == n);
    for (std::size_t i = 0; i < n; ++i) {
      const double tol = 1e-9 * std::max(1.0, std::abs(ref.scores[i]));
      INFO("rep=", rep, " n=", n, " d=", d, " k=", k, " i=", i);
      CHECK(std::abs(got[i] - ref.scores[i]) <= tol);
    }
  }
}

TEST_CASE("threshold_by_contamination: exact count, tie-break, threshold value") {
  SUBCASE("25 of 500") {
    std::vector<double> scores(500);
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> dist(-3.0, -0.5);
    for (auto& s : scores) s = dist(rng);
    auto r = threshold_by_contamination(scores, 0.05);
    CHECK(r.flagged_count() == 25);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (r.flags[i]) CHECK(scores[i] <= r.threshold);
      else CHECK(scores[i] >= r.threshold);
    }
  }
  SUBCASE("all equal: lowest ids win") {
    std::vector<double> scores(100, -1.0);
    auto r = threshold_by_contamination(scores, 0.05);
    CHECK(r.flagged_count() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(r.flags[i] == 1);
    for (std::size_t i = 5; i < 100; ++i) CHECK(r.flags[i] == 0);
    CHECK(r.threshold == -1.0);
  }
  SUBCASE("scores -1..-10, c=0.2") {
    std::vector<double> scores;
    for (int i = 1; i <= 10; ++i) scores.push_back(-static_cast<double>(i));
    auto r = threshold_by_contamination(scores, 0.2);
    CHECK(r.flagged_count() == 2);
    CHECK(r.flags[9] == 1);  // score -10
    CHECK(r.flags[8] == 1);  // score -9
    CHECK(r.threshold == -9.0);
  }
  SUBCASE("m = 0 is a config error") {
    std::vector<double> scores(5, -1.0);
    CHECK_THROWS_AS(threshold_by_contamination(scores, 0.1), Error);
  }
}

TEST_CASE("lof scores are bit-identical across thread counts") {
  Matrix pts = testutil::random_matrix(150, 24, 777);
  const auto one = lof_scores(pts, 10, 1);
  const auto four = lof_scores(pts, 10, 4);
  for (std::size_t i = 0; i < one.size(); ++i) CHECK(one[i] == four[i]);
}

TEST_CASE("lof is permutation invariant") {
  const std::size_t n = 80;
  Matrix pts = testutil::random_matrix(n, 5, 4242);
  const auto base = lof_scores(pts, 6);
  const auto base_flags = threshold_by_contamination(base, 0.1).flags;

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937(5));
  Matrix shuffled(n, 5);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 5; ++j) shuffled.at(i, j) = pts.at(perm[i], j);
  }
  const auto shuffled_scores = lof_scores(shuffled, 6);
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(shuffled_scores[i] == doctest::Approx(base[perm[i]]).epsilon(1e-12));
  }
  // Flags carried back through the permutation agree (no near-threshold ties
  // in random continuous data).
  const auto shuffled_flags = threshold_by_contamination(shuffled_scores, 0.1).flags;
  for (std::size_t i = 0; i < n; ++i) CHECK(shuffled_flags[i] == base_flags[perm[i]]);
}

TEST_CASE("lof is scale invariant") {
  Matrix pts = testutil::random_matrix(90, 8, 31);
  const auto base = lof_scores(pts, 7);
  for (double lambda : {0.25, 3.0, 117.0}) {
    Matrix scaled = pts;
    for (auto& v : scaled.data) v *= lambda;
    const auto scaled_scores = lof_scores(scaled, 7);
    for (std::size_t i = 0; i < base.size(); ++i) {
      CHECK(scaled_scores[i] == doctest::Approx(base[i]).epsilon(1e-6));
    }
  }
}

TEST_CASE("default_k follows the size rule") {
  CHECK(default_k(20589) == 4000);   // 0.2n above the cap
  CHECK(default_k(2000) == 400);     // ceil(0.2 * 2000)
  CHECK(default_k(30) == 10);        // floor of the rule
  CHECK(default_k(11) == 10);
  CHECK(default_k(8) == 7);          // clamped below n
}

TEST_CASE("detect_outliers: planted rare demographic combination dominates the flags") {
  // 950 rows in three common patterns, 50 rows with a unique pair of rare
  // attributes. Demographic space, k=200, c=0.05.
  const std::size_t n = 1000, g = 10;
  std::vector<AttributeChannel> schema{{"toxicity", ChannelKind::toxicity_annotation, "", ""}};
  for (std::size_t i = 0; i < g; ++i) {
    schema.push_back({"d" + std::to_string(i), ChannelKind::demographic_annotation, "", ""});
  }
  std::vector<std::vector<double>> cols(schema.size(), std::vector<double>(n, 0.0));
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> jitter(0.0, 0.18);
  for (std::size_t r = 0; r < n; ++r) {
    if (r < 950) {
      cols[1 + (r % 3)][r] = 1.0;             // one of three common identities
      cols[1 + 5][r] = jitter(rng);           // light noise on an unused channel
    } else {
      cols[1 + 7][r] = 1.0;                   // rare pair
      cols[1 + 8][r] = 1.0;
    }
  }
  std::vector<std::int64_t> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  std::vector<std::string> texts(n, "x");
  DatasetTable table = DatasetTable::from_columns(std::move(ids), std::move(texts), schema, cols);
  table.apply_binarize();
  table.apply_disagreement();

  OutlierConfig config;
  config.space = Space::demographic;
  config.n_neighbors = 200;
  config.contamination = 0.05;
  const OutlierAssignment assignment = detect_outliers(table, nullptr, {config}, 2);
  const LofResult& lof = assignment.per_space.at(Space::demographic);
  CHECK(lof.flagged_count() == 50);

  std::size_t planted_flagged = 0;
  for (std::size_t r = 950; r < n; ++r) planted_flagged += lof.flags[r];
  CHECK(planted_flagged >= 40);  // >= 80% of flags on the planted rows

  // Brute-force oracle agrees on the flag set.
  const auto ref_scores = testutil::lof_reference(table.demographic_matrix(), 200).scores;
  const auto ref_flags = testutil::flag_reference(ref_scores, 0.05);
  for (std::size_t r = 0; r < n; ++r) CHECK(ref_flags[r] == lof.flags[r]);
}

TEST_CASE("detect_outliers: determinism and alignment errors") {
  DatasetTable t = [] {
    std::vector<AttributeChannel> schema{{"toxicity", ChannelKind::toxicity_annotation, "", ""},
                                         {"d0", ChannelKind::demographic_annotation, "", ""}};
    std::vector<std::vector<double>> cols(2, std::vector<double>(60));
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (auto& col : cols) {
      for (auto& v : col) v = dist(rng);
    }
    std::vector<std::int64_t> ids(60);
    std::iota(ids.begin(), ids.end(), 0);
    return DatasetTable::from_columns(std::move(ids), std::vector<std::string>(60, "t"), schema, cols);
  }();
  t.apply_binarize();
  t.apply_disagreement();

  OutlierConfig config;
  config.space = Space::demographic;
  config.n_neighbors = 5;
  config.contamination = 0.1;
  auto a = detect_outliers(t, nullptr, {config}, 1);
  auto b = detect_outliers(t, nullptr, {config}, 3);
  CHECK(a.per_space.at(Space::demographic).scores == b.per_space.at(Space::demographic).scores);
  CHECK(a.per_space.at(Space::demographic).flags == b.per_space.at(Space::demographic).flags);

  EmbeddingMatrix wrong;
  wrong.rows = 59;
  wrong.dim = 4;
  wrong.data.assign(59 * 4, 0.0);
  OutlierConfig text_config;
  text_config.space = Space::text;
  text_config.n_neighbors = 5;
  CHECK_THROWS_AS(detect_outliers(t, &wrong, {text_config}, 1), Error);
}

TEST_CASE("lof csv round-trips scores at full precision") {
  testutil::TempDir tmp("lofcsv");
  Matrix pts = testutil::random_matrix(50, 4, 55);
  LofResult r = threshold_by_contamination(lof_scores(pts, 5), 0.1);
  r.config.space = Space::demographic;

  std::vector<std::int64_t> ids(50);
  std::iota(ids.begin(), ids.end(), 100);
  const auto path = tmp.path() / "lof.csv";
  save_lof_csv(r, ids, path);
  LofResult loaded = load_lof_csv(path, ids);
  CHECK(loaded.scores == r.scores);
  CHECK(loaded.flags == r.flags);
  CHECK(loaded.config.space == Space::demographic);
}
