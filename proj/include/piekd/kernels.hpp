#pragma once

#include <cstdint>

namespace piekd::kern {

// Dense f64 kernels behind the tensor ops. The OpenMP versions partition by
// output row, so each element accumulates in the same order as the serial
// reference and results are bitwise identical for any thread count.

// C[m,n] = A[m,k] * B[k,n]
void matmul_nn(const double* a, const double* b, double* c, std::int64_t m,
               std::int64_t k, std::int64_t n);

// C[m,k] += A[m,n] * B[k,n]^T   (dX = dY * W^T in backward)
void matmul_nt_acc(const double* a, const double* b, double* c, std::int64_t m,
                   std::int64_t n, std::int64_t k);

// C[k,n] += A[m,k]^T * B[m,n]   (dW = X^T * dY in backward)
void matmul_tn_acc(const double* a, const double* b, double* c, std::int64_t m,
                   std::int64_t k, std::int64_t n);

// out[j] += sum_i A[i,j]
void colsum_acc(const double* a, double* out, std::int64_t m, std::int64_t n);

namespace ref {
// Serial reference implementations, kept for the bitwise-equality tests and
// the serial-vs-parallel benchmark.
void matmul_nn(const double* a, const double* b, double* c, std::int64_t m,
               std::int64_t k, std::int64_t n);
void matmul_nt_acc(const double* a, const double* b, double* c, std::int64_t m,
                   std::int64_t n, std::int64_t k);
void matmul_tn_acc(const double* a, const double* b, double* c, std::int64_t m,
                   std::int64_t k, std::int64_t n);
}  // namespace ref

}  // namespace piekd::kern
