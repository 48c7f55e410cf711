#pragma once

#include <cstddef>
#include <functional>

namespace eki {

// jobs <= 0 means one per hardware thread.
unsigned resolve_jobs(int requested);

// Calls fn(i, worker) for i in [0, n) on up to `jobs` threads. Worker ids are
// in [0, jobs) and stable for the duration of one call. The first exception
// thrown by any task is rethrown after all threads join.
void parallel_for(std::size_t n, unsigned jobs,
                  const std::function<void(std::size_t, unsigned)>& fn);

} // namespace eki
