#include "piekd/par.hpp"

#include <algorithm>
#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace piekd::par {

namespace {
std::atomic<int> g_global_threads{0};
thread_local int tl_local_threads = 0;

int omp_default_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}
}  // namespace

void set_global_threads(int n) { g_global_threads.store(n < 0 ? 0 : n); }

void set_local_threads(int n) { tl_local_threads = n < 0 ? 0 : n; }

int effective_threads() {
  int n = tl_local_threads;
  if (n == 0) n = g_global_threads.load();
  if (n == 0) n = omp_default_threads();
  return std::max(1, n);
}

int hardware_threads() { return omp_default_threads(); }

LocalThreadsGuard::LocalThreadsGuard(int n) : prev_(tl_local_threads) {
  tl_local_threads = n < 0 ? 0 : n;
}

LocalThreadsGuard::~LocalThreadsGuard() { tl_local_threads = prev_; }

}  // namespace piekd::par
