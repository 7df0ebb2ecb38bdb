// SPDX-License-Identifier: Apache-2.0
//
// Scalar reference kernels. These are the semantic ground truth the SIMD
// variants are tested against; keep them simple.

#include "pear/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace pear::kernels::scalar {

void gemm_nn(std::size_t m, std::size_t n, std::size_t k,
             const double* a, const double* b, double* c, bool accumulate) {
    if (!accumulate) std::memset(c, 0, m * n * sizeof(double));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a[i * k + p];
            const double* brow = b + p * n;
            double* crow = c + i * n;
            for (std::size_t j = 0; j < n; ++j) {
                crow[j] += aip * brow[j];
            }
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
            const double api = arow[i];
            double* crow = c + i * n;
            for (std::size_t j = 0; j < n; ++j) {
                crow[j] += api * brow[j];
            }
        }
    }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k,
             const double* a, const double* b, double* c, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = b + j * k;
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                acc += arow[p] * brow[p];
            }
            double& out = c[i * n + j];
            out = accumulate ? out + acc : acc;
        }
    }
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double dot(std::size_t n, const double* x, const double* y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void scale(std::size_t n, double alpha, double* x) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void add_row_bias(std::size_t rows, std::size_t cols, const double* bias, double* x) {
    for (std::size_t r = 0; r < rows; ++r) {
        double* row = x + r * cols;
        for (std::size_t c = 0; c < cols; ++c) row[c] += bias[c];
    }
}

void relu(std::size_t n, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(std::size_t n, const double* x, const double* dy, double* dx) {
    for (std::size_t i = 0; i < n; ++i) {
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
        double mx = in[0];
        for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, in[c]);
        double sum = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            out[c] = std::exp(in[c] - mx);
            sum += out[c];
        }
        const double inv = 1.0 / sum;
        for (std::size_t c = 0; c < cols; ++c) out[c] *= inv;
    }
}

extern const Ops kOps;
const Ops kOps = {
    gemm_nn, gemm_tn, gemm_nt, axpy, dot, scale,
    add_row_bias, relu, relu_backward, sigmoid, softmax_rows,
};

}  // namespace pear::kernels::scalar
