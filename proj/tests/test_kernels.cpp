#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oaudit/kernels.hpp"
#include "testutil.hpp"

using namespace oaudit;

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("scalar kernel matches a hand-rolled distance") {
  const auto& k = kernels::scalar_kernel();
  const double q[3] = {1.0, 2.0, 3.0};
  const double pts[6] = {1.0, 2.0, 3.0, 0.0, 0.0, 0.0};
  double out[2];
  k.l2sq_row(q, pts, 2, 3, out);
  CHECK(out[0] == 0.0);
  CHECK(out[1] == doctest::Approx(14.0).epsilon(1e-15));
}

TEST_CASE("every available kernel agrees with the scalar reference") {
  const auto kernels_list = kernels::available_kernels();
  REQUIRE(!kernels_list.empty());
  INFO("active kernel: ", kernels::active_kernel().name);

  // Dims chosen to hit all remainder paths (d%8, d%4, d<4).
  for (std::size_t d : {1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 12u, 24u, 30u, 64u, 65u}) {
    const std::size_t n = 64;
    const auto pts = testutil::random_matrix(n, d, static_cast<std::uint32_t>(1000 + d), -2.0, 2.0);
    const auto queries = testutil::random_matrix(8, d, static_cast<std::uint32_t>(2000 + d), -2.0, 2.0);

    std::vector<double> ref(n), got(n);
    for (std::size_t qi = 0; qi < queries.rows; ++qi) {
      kernels::scalar_kernel().l2sq_row(queries.row(qi), pts.data.data(), n, d, ref.data());
      for (const auto& k : kernels_list) {
        k.l2sq_row(queries.row(qi), pts.data.data(), n, d, got.data());
        INFO("kernel ", k.name, " d=", d, " q=", qi);
        CHECK(max_abs_diff(ref, got) < 1e-12);
      }
    }
  }
}

TEST_CASE("kernels are exact on integer-valued coordinates") {
  // Small integers are exactly representable; every kernel must produce
  // identical bits, which protects distance-tie handling downstream.
  const std::size_t n = 32, d = 24;
  Matrix pts(n, d);
  std::mt19937 rng(7);
  for (auto& v : pts.data) v = static_cast<double>(rng() % 3);
  std::vector<double> ref(n), got(n);
  kernels::scalar_kernel().l2sq_row(pts.row(3), pts.data.data(), n, d, ref.data());
  for (const auto& k : kernels::available_kernels()) {
    k.l2sq_row(pts.row(3), pts.data.data(), n, d, got.data());
    for (std::size_t i = 0; i < n; ++i) {
      INFO("kernel ", k.name, " i=", i);
      CHECK(ref[i] == got[i]);
    }
  }
}

TEST_CASE("zero-dimension and empty inputs are handled") {
  std::vector<double> out(4, -1.0);
  const double q = 0.0;
  for (const auto& k : kernels::available_kernels()) {
    k.l2sq_row(&q, &q, 0, 1, out.data());  // n = 0: no writes
    CHECK(out[0] == -1.0);
  }
}
