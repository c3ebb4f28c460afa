#pragma once

#include <cstddef>
#include <functional>

namespace meguide {

// Worker count used by parallel_for; defaults to the host's logical cores.
void set_num_threads(std::size_t n);
std::size_t num_threads();

// Runs fn(i) for i in [0, n) across the configured workers. Each index is
// visited exactly once; callers write results into per-index slots so the
// outcome is independent of scheduling. The first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace meguide
