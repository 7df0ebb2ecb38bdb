// SPDX-License-Identifier: Apache-2.0
//
// AVX2+FMA kernel variants. Compiled with -mavx2 -mfma on x86-64 only;
// dispatch guarantees they never run on CPUs without those features.
// exp() stays scalar (no vector exp without a math library); the max/sum/
// normalize passes around it are vectorized.

#include "pear/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <cstring>

namespace pear::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

inline double hmax(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_max_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_max_sd(lo, swapped));
}

// crow[0..n) += aip * brow[0..n)
inline void fma_row(std::size_t n, double aip, const double* brow, double* crow) {
    const __m256d av = _mm256_set1_pd(aip);
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) {
        __m256d c0 = _mm256_loadu_pd(crow + j);
        __m256d c1 = _mm256_loadu_pd(crow + j + 4);
        c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + j), c0);
        c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + j + 4), c1);
        _mm256_storeu_pd(crow + j, c0);
        _mm256_storeu_pd(crow + j + 4, c1);
    }
    for (; j + 4 <= n; j += 4) {
        __m256d c0 = _mm256_loadu_pd(crow + j);
        c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + j), c0);
        _mm256_storeu_pd(crow + j, c0);
    }
    for (; j < n; ++j) crow[j] += aip * brow[j];
}

}  // namespace

void gemm_nn(std::size_t m, std::size_t n, std::size_t k,
             const double* a, const double* b, double* c, bool accumulate) {
    if (!accumulate) std::memset(c, 0, m * n * sizeof(double));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            fma_row(n, a[i * k + p], b + p * n, c + i * n);
        }
    }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k,
             const double* a, const double* b, double* c, bool accumulate) {
    if (!accumulate) std::memset(c, 0, m * n * sizeof(double));
    for (std::size_t p = 0; p < k; ++p) {
        const double* arow = a + p * m;
        const double* brow = b + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            fma_row(n, arow[i], brow, c + i * n);
        }
    }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k,
             const double* a, const double* b, double* c, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = b + j * k;
            __m256d acc = _mm256_setzero_pd();
            std::size_t p = 0;
            for (; p + 4 <= k; p += 4) {
                acc = _mm256_fmadd_pd(_mm256_loadu_pd(arow + p),
                                      _mm256_loadu_pd(brow + p), acc);
            }
            double s = hsum(acc);
            for (; p < k; ++p) s += arow[p] * brow[p];
            double& out = c[i * n + j];
            out = accumulate ? out + s : s;
        }
    }
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
    fma_row(n, alpha, x, y);
}

double dot(std::size_t n, const double* x, const double* y) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

void scale(std::size_t n, double alpha, double* x) {
    const __m256d av = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(x + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) x[i] *= alpha;
}

void add_row_bias(std::size_t rows, std::size_t cols, const double* bias, double* x) {
    for (std::size_t r = 0; r < rows; ++r) {
        double* row = x + r * cols;
        std::size_t c = 0;
        for (; c + 4 <= cols; c += 4) {
            _mm256_storeu_pd(row + c, _mm256_add_pd(_mm256_loadu_pd(row + c),
                                                    _mm256_loadu_pd(bias + c)));
        }
        for (; c < cols; ++c) row[c] += bias[c];
    }
}

void relu(std::size_t n, const double* x, double* y) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_max_pd(zero, _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(std::size_t n, const double* x, const double* dy, double* dx) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
        __m256d add = _mm256_and_pd(mask, _mm256_loadu_pd(dy + i));
        _mm256_storeu_pd(dx + i, _mm256_add_pd(_mm256_loadu_pd(dx + i), add));
    }
    for (; i < n; ++i) {
        if (x[i] > 0.0) dx[i] += dy[i];
    }
}

void sigmoid(std::size_t n, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
}

void softmax_rows(std::size_t rows, std::size_t cols, const double* x, double* y) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = x + r * cols;
        double* out = y + r * cols;

        double mx;
        if (cols >= 4) {
            __m256d vmax = _mm256_loadu_pd(in);
            std::size_t c = 4;
            for (; c + 4 <= cols; c += 4) {
                vmax = _mm256_max_pd(vmax, _mm256_loadu_pd(in + c));
            }
            mx = hmax(vmax);
            for (; c < cols; ++c) mx = std::max(mx, in[c]);
        } else {
            mx = in[0];
            for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, in[c]);
        }

        double sum = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            out[c] = std::exp(in[c] - mx);
            sum += out[c];
        }
        scale(cols, 1.0 / sum, out);
    }
}

extern const Ops kOps;
const Ops kOps = {
    gemm_nn, gemm_tn, gemm_nt, axpy, dot, scale,
    add_row_bias, relu, relu_backward, sigmoid, softmax_rows,
};

}  // namespace pear::kernels::avx2

#endif  // x86-64
