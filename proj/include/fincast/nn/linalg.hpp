#pragma once

#include <cstddef>
#include <vector>

namespace fincast::nn {

// Accumulating GEMM kernels with a fixed, batch-size-independent summation
// order: every output element is accumulated over the inner dimension in
// ascending index order, starting from zero in both the blocked and the edge
// path, so a row's result is bit-identical no matter how the surrounding rows
// are partitioned. Callers zero-initialize C; gradient callers accumulate.

namespace detail {

template <typename T>
struct vec_traits {
    typedef T type __attribute__((vector_size(32)));
    static constexpr std::size_t width = 32 / sizeof(T);
};

// 4 rows x 2 vector strips; accumulators stay in registers across the k sweep.
template <typename T>
inline void gemm_tile_4x2(const T* __restrict__ a, const T* __restrict__ b, T* __restrict__ c,
                          std::size_t k, std::size_t lda, std::size_t ldb, std::size_t ldc) {
    using V = typename vec_traits<T>::type;
    constexpr std::size_t W = vec_traits<T>::width;
    V acc00{}, acc01{}, acc10{}, acc11{}, acc20{}, acc21{}, acc30{}, acc31{};
    for (std::size_t q = 0; q < k; ++q) {
        const T* brow = b + q * ldb;
        V b0, b1;
        __builtin_memcpy(&b0, brow, sizeof(V));
        __builtin_memcpy(&b1, brow + W, sizeof(V));
        const V a0 = V{} + a[0 * lda + q];
        const V a1 = V{} + a[1 * lda + q];
        const V a2 = V{} + a[2 * lda + q];
        const V a3 = V{} + a[3 * lda + q];
        acc00 += a0 * b0; acc01 += a0 * b1;
        acc10 += a1 * b0; acc11 += a1 * b1;
        acc20 += a2 * b0; acc21 += a2 * b1;
        acc30 += a3 * b0; acc31 += a3 * b1;
    }
    const V* accs[4][2] = {{&acc00, &acc01}, {&acc10, &acc11}, {&acc20, &acc21}, {&acc30, &acc31}};
    for (std::size_t i = 0; i < 4; ++i) {
        T* crow = c + i * ldc;
        for (std::size_t v = 0; v < 2; ++v) {
            V cv;
            __builtin_memcpy(&cv, crow + v * W, sizeof(V));
            cv += *accs[i][v];
            __builtin_memcpy(crow + v * W, &cv, sizeof(V));
        }
    }
}

}  // namespace detail

/// C[m,n] += A[m,k] * B[k,n]
template <typename T>
void gemm_nn(const T* __restrict__ a, const T* __restrict__ b, T* __restrict__ c,
             std::size_t m, std::size_t k, std::size_t n) {
    constexpr std::size_t MR = 4;
    constexpr std::size_t NR = 2 * detail::vec_traits<T>::width;
    const std::size_t m_main = m - m % MR;
    const std::size_t n_main = n - n % NR;
    for (std::size_t i = 0; i < m_main; i += MR)
        for (std::size_t j = 0; j < n_main; j += NR)
            detail::gemm_tile_4x2<T>(a + i * k, b + j, c + i * n + j, k, k, n, n);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j0 = (i < m_main) ? n_main : 0;
        if (j0 == n) continue;
        T* __restrict__ crow = c + i * n;
        const T* __restrict__ arow = a + i * k;
        for (std::size_t q = 0; q < k; ++q) {
            const T aiq = arow[q];
            const T* __restrict__ brow = b + q * n;
            for (std::size_t j = j0; j < n; ++j) crow[j] += aiq * brow[j];
        }
    }
}

/// C[k,n] += A[m,k]^T * B[m,n]
template <typename T>
void gemm_tn(const T* __restrict__ a, const T* __restrict__ b, T* __restrict__ c,
             std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const T* __restrict__ arow = a + i * k;
        const T* __restrict__ brow = b + i * n;
        for (std::size_t q = 0; q < k; ++q) {
            const T aiq = arow[q];
            T* __restrict__ crow = c + q * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aiq * brow[j];
        }
    }
}

/// B[n,m] = A[m,n]^T
template <typename T>
std::vector<T> transpose(const T* a, std::size_t m, std::size_t n) {
    std::vector<T> out(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a[i * n + j];
    return out;
}

}  // namespace fincast::nn
