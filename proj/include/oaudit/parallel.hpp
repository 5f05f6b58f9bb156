#pragma once

#include <cstddef>
#include <functional>

namespace oaudit {

// 0 means "use all hardware threads".
int resolve_threads(int requested);

// Runs fn(begin, end) over contiguous chunks of [0, n). Callers must write
// only to per-index slots so the partition cannot affect results; with that
// contract the output is bit-identical for every thread count.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace oaudit
