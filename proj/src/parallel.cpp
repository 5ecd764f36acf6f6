#include "eitdg/parallel.hpp"

#include <atomic>

namespace eitdg {

namespace {
std::atomic<unsigned> g_thread_limit{0};
}

void set_thread_limit(unsigned n) { g_thread_limit.store(n); }

unsigned thread_limit() {
  const unsigned n = g_thread_limit.load();
  if (n > 0) return n;
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace eitdg
