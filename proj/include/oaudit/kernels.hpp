#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace oaudit::kernels {

// Squared Euclidean distances from one query vector to n points.
// points is row-major n x d; out receives n values.
using L2sqRowFn = void (*)(const double* query, const double* points, std::size_t n,
                           std::size_t d, double* out);

struct Kernel {
  const char* name;
  L2sqRowFn l2sq_row;
};

// Portable reference implementation; always available.
const Kernel& scalar_kernel();

// Kernels compiled into this binary and usable on this CPU.
std::vector<Kernel> available_kernels();

// Best available kernel, selected once per process. The OAUDIT_KERNEL
// environment variable ("scalar", "avx2", "neon") forces a specific one;
// requesting an unavailable kernel is a config error.
const Kernel& active_kernel();

}  // namespace oaudit::kernels
