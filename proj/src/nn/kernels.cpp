#include "emotionbox/nn/kernels.hpp"

#include <cstddef>

namespace ebox::nn::kernels {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr long long kParallelWork = 1LL << 15;

inline std::size_t at(int r, int c, int cols) {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c);
}

}  // namespace

template <typename T>
void gemm_nn(int m, int n, int k, std::span<const T> a, std::span<const T> b, std::span<T> c) {
    const T* A = a.data();
    const T* B = b.data();
    T* C = c.data();
    const bool par = static_cast<long long>(m) * n * k >= kParallelWork && m > 1;
#pragma omp parallel for schedule(static) if (par)
    for (int i = 0; i < m; ++i) {
        T* crow = C + at(i, 0, n);
        const T* arow = A + at(i, 0, k);
        for (int p = 0; p < k; ++p) {
            const T av = arow[p];
            if (av == T{}) continue;
            const T* brow = B + at(p, 0, n);
#pragma omp simd
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

template <typename T>
void gemm_tn(int m, int n, int k, std::span<const T> a, std::span<const T> b, std::span<T> c) {
    const T* A = a.data();
    const T* B = b.data();
    T* C = c.data();
    const bool par = static_cast<long long>(m) * n * k >= kParallelWork && k > 1;
#pragma omp parallel for schedule(static) if (par)
    for (int p = 0; p < k; ++p) {
        T* crow = C + at(p, 0, n);
        for (int i = 0; i < m; ++i) {
            const T av = A[at(i, p, k)];
            if (av == T{}) continue;
            const T* brow = B + at(i, 0, n);
#pragma omp simd
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

template <typename T>
void gemm_nt(int m, int n, int k, std::span<const T> a, std::span<const T> b, std::span<T> c) {
    const T* A = a.data();
    const T* B = b.data();
    T* C = c.data();
    const bool par = static_cast<long long>(m) * n * k >= kParallelWork && m > 1;
#pragma omp parallel for schedule(static) if (par)
    for (int i = 0; i < m; ++i) {
        const T* arow = A + at(i, 0, n);
        T* crow = C + at(i, 0, k);
        for (int p = 0; p < k; ++p) {
            const T* brow = B + at(p, 0, n);
            T acc{};
#pragma omp simd reduction(+ : acc)
            for (int j = 0; j < n; ++j) acc += arow[j] * brow[j];
            crow[p] += acc;
        }
    }
}

template <typename T>
void add_column_sums(int m, int n, std::span<const T> a, std::span<T> dst) {
    for (int i = 0; i < m; ++i) {
        const T* row = a.data() + at(i, 0, n);
        for (int j = 0; j < n; ++j) dst[static_cast<std::size_t>(j)] += row[j];
    }
}

template <typename T>
void add_row_bias(int m, int n, std::span<T> a, std::span<const T> bias) {
    for (int i = 0; i < m; ++i) {
        T* row = a.data() + at(i, 0, n);
        for (int j = 0; j < n; ++j) row[j] += bias[static_cast<std::size_t>(j)];
    }
}

namespace reference {

template <typename T>
void gemm_nn(int m, int n, int k, std::span<const T> a, std::span<const T> b, std::span<T> c) {
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            T acc{};
            for (int p = 0; p < k; ++p) acc += a[at(i, p, k)] * b[at(p, j, n)];
            c[at(i, j, n)] += acc;
        }
    }
}

template <typename T>
void gemm_tn(int m, int n, int k, std::span<const T> a, std::span<const T> b, std::span<T> c) {
    for (int p = 0; p < k; ++p) {
        for (int j = 0; j < n; ++j) {
            T acc{};
            for (int i = 0; i < m; ++i) acc += a[at(i, p, k)] * b[at(i, j, n)];
            c[at(p, j, n)] += acc;
        }
    }
}

template <typename T>
void gemm_nt(int m, int n, int k, std::span<const T> a, std::span<const T> b, std::span<T> c) {
    for (int i = 0; i < m; ++i) {
        for (int p = 0; p < k; ++p) {
            T acc{};
            for (int j = 0; j < n; ++j) acc += a[at(i, j, n)] * b[at(p, j, n)];
            c[at(i, p, k)] += acc;
        }
    }
}

}  // namespace reference

#define EBOX_INSTANTIATE_KERNELS(T)                                                                 \
    template void gemm_nn<T>(int, int, int, std::span<const T>, std::span<const T>, std::span<T>); \
    template void gemm_tn<T>(int, int, int, std::span<const T>, std::span<const T>, std::span<T>); \
    template void gemm_nt<T>(int, int, int, std::span<const T>, std::span<const T>, std::span<T>); \
    template void add_column_sums<T>(int, int, std::span<const T>, std::span<T>);                   \
    template void add_row_bias<T>(int, int, std::span<T>, std::span<const T>);                      \
    template void reference::gemm_nn<T>(int, int, int, std::span<const T>, std::span<const T>, std::span<T>); \
    template void reference::gemm_tn<T>(int, int, int, std::span<const T>, std::span<const T>, std::span<T>); \
    template void reference::gemm_nt<T>(int, int, int, std::span<const T>, std::span<const T>, std::span<T>);

EBOX_INSTANTIATE_KERNELS(float)
EBOX_INSTANTIATE_KERNELS(double)

#undef EBOX_INSTANTIATE_KERNELS

}  // namespace ebox::nn::kernels
