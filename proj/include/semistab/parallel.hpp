#pragma once

#include <functional>

namespace semistab {

// Worker count: explicit setting, else SEMISTAB_THREADS, else hardware concurrency.
int thread_count();
void set_thread_count(int n);

// Runs body(i) for i in [0, n) on the worker pool; the first exception is rethrown.
void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace semistab
