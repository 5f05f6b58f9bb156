// AVX2 + FMA distance kernel. This translation unit is compiled with
// -mavx2 -mfma; callers must gate on runtime CPU support (see dispatch).

#include <cstddef>
#include <immintrin.h>

namespace oaudit::kernels {

namespace {

inline double hsum256(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

}  // namespace

void l2sq_row_avx2(const double* query, const double* points, std::size_t n,
                   std::size_t d, double* out) {
  const std::size_t d8 = d - d % 8;
  const std::size_t d4 = d - d % 4;
  for (std::size_t j = 0; j < n; ++j) {
    const double* p = points + j * d;
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t t = 0;
    for (; t < d8; t += 8) {
      __m256d diff0 = _mm256_sub_pd(_mm256_loadu_pd(query + t), _mm256_loadu_pd(p + t));
      __m256d diff1 = _mm256_sub_pd(_mm256_loadu_pd(query + t + 4), _mm256_loadu_pd(p + t + 4));
      acc0 = _mm256_fmadd_pd(diff0, diff0, acc0);
      acc1 = _mm256_fmadd_pd(diff1, diff1, acc1);
    }
    for (; t < d4; t += 4) {
      __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(query + t), _mm256_loadu_pd(p + t));
      acc0 = _mm256_fmadd_pd(diff, diff, acc0);
    }
    double acc = hsum256(_mm256_add_pd(acc0, acc1));
    for (; t < d; ++t) {
      const double diff = query[t] - p[t];
      acc += diff * diff;
    }
    out[j] = acc;
  }
}

}  // namespace oaudit::kernels
