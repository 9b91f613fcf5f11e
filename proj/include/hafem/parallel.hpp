#ifndef HAFEM_PARALLEL_HPP
#define HAFEM_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace hafem {

/// Worker count: HARMONIC_AFEM_THREADS if set (>= 1), otherwise the
/// hardware concurrency.
int thread_count();

/// Runs body(i) for i in [0, n) on up to thread_count() threads. Each index is
/// visited exactly once; callers write to disjoint slots so results do not
/// depend on the schedule.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace hafem

#endif  // HAFEM_PARALLEL_HPP
