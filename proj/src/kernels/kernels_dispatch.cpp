#include "oaudit/kernels.hpp"

#include <cstdlib>
#include <string>

#include "oaudit/errors.hpp"

namespace oaudit::kernels {

void l2sq_row_scalar(const double*, const double*, std::size_t, std::size_t, double*);
#if defined(OAUDIT_HAVE_AVX2_TU)
void l2sq_row_avx2(const double*, const double*, std::size_t, std::size_t, double*);
#endif
#if defined(OAUDIT_HAVE_NEON_TU)
void l2sq_row_neon(const double*, const double*, std::size_t, std::size_t, double*);
#endif

const Kernel& scalar_kernel() {
  static const Kernel k{"scalar", &l2sq_row_scalar};
  return k;
}

std::vector<Kernel> available_kernels() {
  std::vector<Kernel> out;
  out.push_back(scalar_kernel());
#if defined(OAUDIT_HAVE_AVX2_TU)
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
    out.push_back(Kernel{"avx2", &l2sq_row_avx2});
  }
#endif
#if defined(OAUDIT_HAVE_NEON_TU)
  out.push_back(Kernel{"neon", &l2sq_row_neon});
#endif
  return out;
}

namespace {

Kernel select_kernel() {
  const std::vector<Kernel> usable = available_kernels();
  const char* forced = std::getenv("OAUDIT_KERNEL");
  if (forced != nullptr && *forced != '\0') {
    for (const auto& k : usable) {
      if (std::string(forced) == k.name) return k;
    }
    fail(errc::config, "OAUDIT_KERNEL requests '" + std::string(forced) +
                           "', which is not available on this CPU/build");
  }
  return usable.back();  // ordered scalar -> best SIMD
}

}  // namespace

const Kernel& active_kernel() {
  static const Kernel selected = select_kernel();
  return selected;
}

}  // namespace oaudit::kernels
