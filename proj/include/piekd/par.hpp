#pragma once

namespace piekd::par {

// Process-wide thread cap. 0 = use the OpenMP default.
void set_global_threads(int n);

// Per-thread override so nested drivers (e.g. sweep workers) can pin the
// kernels they call to a single thread. 0 = inherit the global cap.
void set_local_threads(int n);

// Effective thread count for parallel regions started from this thread (>= 1).
int effective_threads();

int hardware_threads();

struct LocalThreadsGuard {
  explicit LocalThreadsGuard(int n);
  ~LocalThreadsGuard();
  LocalThreadsGuard(const LocalThreadsGuard&) = delete;
  LocalThreadsGuard& operator=(const LocalThreadsGuard&) = delete;

private:
  int prev_;
};

}  // namespace piekd::par
