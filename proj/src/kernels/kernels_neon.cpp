// NEON distance kernel for aarch64, where NEON is baseline.

#include <arm_neon.h>
#include <cstddef>

namespace oaudit::kernels {

void l2sq_row_neon(const double* query, const double* points, std::size_t n,
                   std::size_t d, double* out) {
  const std::size_t d4 = d - d % 4;
  for (std::size_t j = 0; j < n; ++j) {
    const double* p = points + j * d;
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t t = 0;
    for (; t < d4; t += 4) {
      float64x2_t diff0 = vsubq_f64(vld1q_f64(query + t), vld1q_f64(p + t));
      float64x2_t diff1 = vsubq_f64(vld1q_f64(query + t + 2), vld1q_f64(p + t + 2));
      acc0 = vfmaq_f64(acc0, diff0, diff0);
      acc1 = vfmaq_f64(acc1, diff1, diff1);
    }
    double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; t < d; ++t) {
      const double diff = query[t] - p[t];
      acc += diff * diff;
    }
    out[j] = acc;
  }
}

}  // namespace oaudit::kernels
