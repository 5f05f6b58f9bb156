#include <cstddef>

namespace oaudit::kernels {

// Reference kernel: plain accumulation in index order. The SIMD variants are
// equivalence-tested against this.
void l2sq_row_scalar(const double* query, const double* points, std::size_t n,
                     std::size_t d, double* out) {
  for (std::size_t j = 0; j < n; ++j) {
    const double* p = points + j * d;
    double acc = 0.0;
    for (std::size_t t = 0; t < d; ++t) {
      const double diff = query[t] - p[t];
      acc += diff * diff;
    }
    out[j] = acc;
  }
}

}  // namespace oaudit::kernels
