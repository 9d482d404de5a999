#include "mwdwd/parallel.hpp"

#include <cstdlib>
#include <string>

namespace mwdwd {

namespace {

std::size_t initial_threads() {
  if (const char* env = std::getenv("MWDWD_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (...) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

std::atomic<std::size_t>& thread_setting() {
  static std::atomic<std::size_t> n{initial_threads()};
  return n;
}

}  // namespace

std::size_t default_threads() { return thread_setting().load(); }

void set_default_threads(std::size_t n) { thread_setting().store(n == 0 ? 1 : n); }

}  // namespace mwdwd
