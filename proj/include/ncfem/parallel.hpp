#pragma once

#include "ncfem/common.hpp"

#include <functional>

namespace ncfem {

/// Worker count: hardware concurrency, capped by NCFEM_THREADS when set.
int worker_count();

/// Runs body(i) for i in [0, n). Every index is processed by exactly one
/// worker; callers write results into per-index slots so the outcome does not
/// depend on scheduling. The first exception thrown by a worker is rethrown.
void parallel_for(Index n, const std::function<void(Index)>& body);

}  // namespace ncfem
