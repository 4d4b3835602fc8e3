#include "piekd/kernels.hpp"

#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "piekd/par.hpp"

namespace piekd::kern {

namespace {

// All three products reduce to the same row kernel: crow[0..w) accumulates
// sum_t arow[t] * mat[t, 0..w). The inner loop runs over the contiguous
// output index with no cross-element reductions, so it vectorizes without
// reassociating sums, and every output element accumulates contributions in
// the same order in every variant (serial, OpenMP, fixed-width).

inline void row_acc(const double* arow, const double* mat, double* crow,
                    std::int64_t m, std::int64_t w) {
  for (std::int64_t t = 0; t < m; ++t) {
    const double av = arow[t];
    const double* bt = mat + t * w;
    for (std::int64_t j = 0; j < w; ++j) crow[j] += av * bt[j];
  }
}

// Register-blocked variant for the common hidden width: the output row stays
// in vector registers across the whole reduction.
template <int W>
inline void row_acc_fixed(const double* arow, const double* mat, double* crow,
                          std::int64_t m) {
  double acc[W];
  for (int j = 0; j < W; ++j) acc[j] = crow[j];
  for (std::int64_t t = 0; t < m; ++t) {
    const double av = arow[t];
    const double* bt = mat + t * W;
    for (int j = 0; j < W; ++j) acc[j] += av * bt[j];
  }
  for (int j = 0; j < W; ++j) crow[j] = acc[j];
}

inline void row_acc_dispatch(const double* arow, const double* mat,
                             double* crow, std::int64_t m, std::int64_t w) {
  switch (w) {
    case 64: row_acc_fixed<64>(arow, mat, crow, m); break;
    case 32: row_acc_fixed<32>(arow, mat, crow, m); break;
    case 128: row_acc_fixed<128>(arow, mat, crow, m); break;
    default: row_acc(arow, mat, crow, m, w);
  }
}

inline bool parallel_worth(std::int64_t rows, std::int64_t flops, int threads) {
  // Fork-join only pays off for genuinely large products; small training
  // matmuls run serial, and nested regions are never opened.
#ifdef _OPENMP
  if (omp_in_parallel()) return false;
#endif
  return threads > 1 && rows >= 4 * threads && flops >= (1 << 21);
}

thread_local std::vector<double> tl_scratch;

void transpose(const double* src, double* dst, std::int64_t rows,
               std::int64_t cols) {
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::int64_t c = 0; c < cols; ++c) dst[c * rows + r] = src[r * cols + c];
}

}  // namespace

void matmul_nn(const double* a, const double* b, double* c, std::int64_t m,
               std::int64_t k, std::int64_t n) {
  const int nt = par::effective_threads();
#pragma omp parallel for schedule(static) num_threads(nt) \
    if (parallel_worth(m, m * k * n, nt))
  for (std::int64_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    for (std::int64_t j = 0; j < n; ++j) ci[j] = 0.0;
    row_acc_dispatch(a + i * k, b, ci, k, n);
  }
}

void matmul_nt_acc(const double* a, const double* b, double* c, std::int64_t m,
                   std::int64_t n, std::int64_t k) {
  // C[m,k] += A[m,n] * B[k,n]^T; transpose B once so rows stay contiguous.
  std::vector<double>& bt = tl_scratch;
  bt.resize(static_cast<std::size_t>(n * k));
  transpose(b, bt.data(), k, n);

  const int nt = par::effective_threads();
#pragma omp parallel for schedule(static) num_threads(nt) \
    if (parallel_worth(m, m * n * k, nt))
  for (std::int64_t i = 0; i < m; ++i)
    row_acc_dispatch(a + i * n, bt.data(), c + i * k, n, k);
}

void matmul_tn_acc(const double* a, const double* b, double* c, std::int64_t m,
                   std::int64_t k, std::int64_t n) {
  // C[k,n] += A[m,k]^T * B[m,n]; transpose A so each output row reduces over
  // a contiguous stripe.
  std::vector<double>& at = tl_scratch;
  at.resize(static_cast<std::size_t>(m * k));
  transpose(a, at.data(), m, k);

  const int nt = par::effective_threads();
#pragma omp parallel for schedule(static) num_threads(nt) \
    if (parallel_worth(k, m * k * n, nt))
  for (std::int64_t p = 0; p < k; ++p)
    row_acc_dispatch(at.data() + p * m, b, c + p * n, m, n);
}

void colsum_acc(const double* a, double* out, std::int64_t m, std::int64_t n) {
  for (std::int64_t i = 0; i < m; ++i) {
    const double* ai = a + i * n;
    for (std::int64_t j = 0; j < n; ++j) out[j] += ai[j];
  }
}

namespace ref {

void matmul_nn(const double* a, const double* b, double* c, std::int64_t m,
               std::int64_t k, std::int64_t n) {
  for (std::int64_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    for (std::int64_t j = 0; j < n; ++j) ci[j] = 0.0;
    row_acc(a + i * k, b, ci, k, n);
  }
}

void matmul_nt_acc(const double* a, const double* b, double* c, std::int64_t m,
                   std::int64_t n, std::int64_t k) {
  std::vector<double> bt(static_cast<std::size_t>(n * k));
  transpose(b, bt.data(), k, n);
  for (std::int64_t i = 0; i < m; ++i)
    row_acc(a + i * n, bt.data(), c + i * k, n, k);
}

void matmul_tn_acc(const double* a, const double* b, double* c, std::int64_t m,
                   std::int64_t k, std::int64_t n) {
  for (std::int64_t p = 0; p < k; ++p) {
    double* cp = c + p * n;
    for (std::int64_t i = 0; i < m; ++i) {
      const double av = a[i * k + p];
      const double* bi = b + i * n;
      for (std::int64_t j = 0; j < n; ++j) cp[j] += av * bi[j];
    }
  }
}

}  // namespace ref

}  // namespace piekd::kern
