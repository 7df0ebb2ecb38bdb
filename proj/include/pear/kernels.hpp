// SPDX-License-Identifier: Apache-2.0
//
// Numeric inner-loop kernels behind the tensor ops. Every kernel has a
// scalar reference implementation and, on x86-64 with AVX2+FMA, a
// vectorized variant. The active backend is chosen once at startup from
// CPUID (override via the PEAR_KERNELS env var or set_backend); variants
// are equivalence-tested against each other in tests/kernels_test.

#pragma once

#include <cstddef>
#include <string>

namespace pear::kernels {

enum class Backend { Scalar, Avx2 };

// Table of function pointers for one backend.
struct Ops {
    // c (m x n) = a (m x k) * b (k x n); adds into c when accumulate is set.
    void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k,
                    const double* a, const double* b, double* c, bool accumulate);
    // c (m x n) = a^T * b, with a stored (k x m).
    void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k,
                    const double* a, const double* b, double* c, bool accumulate);
    // c (m x n) = a * b^T, with b stored (n x k).
    void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k,
                    const double* a, const double* b, double* c, bool accumulate);
    void (*axpy)(std::size_t n, double alpha, const double* x, double* y);
    double (*dot)(std::size_t n, const double* x, const double* y);
    void (*scale)(std::size_t n, double alpha, double* x);
    // x[r, :] += bias for every row r.
    void (*add_row_bias)(std::size_t rows, std::size_t cols, const double* bias, double* x);
    void (*relu)(std::size_t n, const double* x, double* y);
    // dx += dy where x > 0.
    void (*relu_backward)(std::size_t n, const double* x, const double* dy, double* dx);
    void (*sigmoid)(std::size_t n, const double* x, double* y);
    // Row-wise softmax with per-row max subtraction.
    void (*softmax_rows)(std::size_t rows, std::size_t cols, const double* x, double* y);
};

bool cpu_supports_avx2();

// Currently active backend (auto-detected on first use).
Backend active_backend();
std::string backend_name(Backend b);

// Force a backend; throws std::runtime_error if unsupported on this CPU.
void set_backend(Backend b);

// Ops table for the active backend.
const Ops& ops();

// Ops table for a specific backend (for equivalence tests).
const Ops& ops_for(Backend b);

}  // namespace pear::kernels
