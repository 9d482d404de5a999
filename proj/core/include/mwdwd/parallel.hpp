#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace mwdwd {

/// Worker count used by the parallel drivers. Initialized from MWDWD_THREADS
/// when set, otherwise hardware concurrency.
std::size_t default_threads();
void set_default_threads(std::size_t n);

namespace detail {
inline thread_local bool in_parallel_region = false;
}

/// Runs fn(i) for i in [0, n) over up to `threads` workers. Tasks must write
/// only to their own output slot, so results do not depend on scheduling.
/// The exception from the lowest failing index is rethrown. Nested calls from
/// inside a worker run serially.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t threads = default_threads()) {
  if (detail::in_parallel_region) threads = 1;
  threads = std::max<std::size_t>(1, std::min(threads, n));
  std::vector<std::exception_ptr> errors(n);
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      detail::in_parallel_region = true;
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
      detail::in_parallel_region = false;
    };
    std::vector<std::thread> pool;
    pool.reserve(threads - 1);
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace mwdwd
