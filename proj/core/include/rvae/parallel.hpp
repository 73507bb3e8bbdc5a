#pragma once

#include <cstddef>
#include <functional>

namespace rvae {

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = hardware
/// concurrency). Each index runs exactly once; results must be written to
/// per-index slots so the outcome does not depend on scheduling. The first
/// exception thrown by any job is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, std::size_t threads = 0);

}  // namespace rvae
