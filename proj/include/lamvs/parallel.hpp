#pragma once

#include <functional>

namespace lamvs {

// Worker count for data-parallel loops (1 = serial). Results are bitwise
// identical for any count: work is split into disjoint index ranges.
void set_worker_count(int workers);
int worker_count();

// Runs fn(i) for i in [0, n) across the configured workers.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace lamvs
