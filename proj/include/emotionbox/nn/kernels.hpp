#pragma once

#include <span>

// Dense kernels behind the model. All matrices are contiguous row-major.
//
// The parallel versions split work over output rows only, and every output
// element is accumulated in the same order no matter how many threads run,
// so results are bitwise reproducible. The reference namespace holds the
// plain serial loops used to check them.
namespace ebox::nn::kernels {

// C[m×n] += A[m×k] · B[k×n]
template <typename T>
void gemm_nn(int m, int n, int k, std::span<const T> a, std::span<const T> b, std::span<T> c);

// C[k×n] += Aᵀ · B where A is m×k and B is m×n
template <typename T>
void gemm_tn(int m, int n, int k, std::span<const T> a, std::span<const T> b, std::span<T> c);

// C[m×k] += A · Bᵀ where A is m×n and B is k×n
template <typename T>
void gemm_nt(int m, int n, int k, std::span<const T> a, std::span<const T> b, std::span<T> c);

// dst[n] += column sums of A[m×n]
template <typename T>
void add_column_sums(int m, int n, std::span<const T> a, std::span<T> dst);

// Every row of A[m×n] += bias[n]
template <typename T>
void add_row_bias(int m, int n, std::span<T> a, std::span<const T> bias);

namespace reference {

template <typename T>
void gemm_nn(int m, int n, int k, std::span<const T> a, std::span<const T> b, std::span<T> c);
template <typename T>
void gemm_tn(int m, int n, int k, std::span<const T> a, std::span<const T> b, std::span<T> c);
template <typename T>
void gemm_nt(int m, int n, int k, std::span<const T> a, std::span<const T> b, std::span<T> c);

}  // namespace reference

}  // namespace ebox::nn::kernels
