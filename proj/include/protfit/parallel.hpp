#pragma once

#include <cstddef>
#include <functional>

namespace protfit {

/// `requested` if non-zero, else PROTFIT_THREADS, else hardware concurrency.
std::size_t thread_count(std::size_t requested = 0);

/// Runs body(i) for i in [0, n) on up to `threads` workers. Each index must
/// write only its own output slot; the first exception thrown is rethrown.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body);

}  // namespace protfit
