#pragma once

#include <cstddef>
#include <functional>

namespace coopstyle {

/// Worker cap from COOPSTYLE_THREADS (default 1, i.e. fully serial).
std::size_t worker_count();

/// Runs fn(i) for i in [0, n). Work items are independent and write to
/// disjoint, index-addressed outputs, so results never depend on the
/// number of workers or their scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace coopstyle
