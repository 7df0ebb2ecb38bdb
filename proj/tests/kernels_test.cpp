// SPDX-License-Identifier: Apache-2.0
//
// Kernel correctness against an independent triple-loop oracle, and
// scalar/AVX2 equivalence on random shapes.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "pear/kernels.hpp"
#include "pear/matrix.hpp"
#include "pear/rng.hpp"

using namespace pear;

namespace {

// Naive i-j-k product, the reference everything else is held against.
Matrix matmul_oracle(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) {
                acc += a.at(i, k) * b.at(k, j);
            }
            c.at(i, j) = acc;
        }
    }
    return c;
}

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-scale, scale);
    return m;
}

void check_close(const Matrix& got, const Matrix& want, double tol) {
    REQUIRE(got.rows() == want.rows());
    REQUIRE(got.cols() == want.cols());
    for (std::size_t i = 0; i < got.size(); ++i) {
        const double diff = std::fabs(got.data()[i] - want.data()[i]);
        const double bound = tol * std::max(1.0, std::fabs(want.data()[i]));
        CHECK(diff <= bound);
    }
}

Matrix run_gemm_nn(kernels::Backend b, const Matrix& a, const Matrix& x) {
    Matrix c(a.rows(), x.cols());
    kernels::ops_for(b).gemm_nn(a.rows(), x.cols(), a.cols(), a.data(), x.data(), c.data(),
                                false);
    return c;
}

}  // namespace

TEST_CASE("gemm_nn: identity and zero cases") {
    Matrix eye{{1, 0}, {0, 1}};
    Matrix b{{3, 4}, {5, 6}};
    check_close(run_gemm_nn(kernels::Backend::Scalar, eye, b), b, 0.0);

    Matrix zero(2, 2);
    Matrix prod = run_gemm_nn(kernels::Backend::Scalar, zero, b);
    for (std::size_t i = 0; i < prod.size(); ++i) CHECK(prod.data()[i] == 0.0);
}

TEST_CASE("gemm_nn: frozen hand example") {
    // [[1,2],[3,4]] * [[5],[6]] = [[17],[39]], verified by the oracle.
    Matrix a{{1, 2}, {3, 4}};
    Matrix b{{5}, {6}};
    const Matrix want = matmul_oracle(a, b);
    CHECK(want.at(0, 0) == 17.0);
    CHECK(want.at(1, 0) == 39.0);
    check_close(run_gemm_nn(kernels::Backend::Scalar, a, b), want, 0.0);
}

TEST_CASE("gemm family matches the oracle on random shapes") {
    Rng rng(7);
    for (int iter = 0; iter < 50; ++iter) {
        const std::size_t m = 1 + rng.uniform_int(0, 12);
        const std::size_t k = 1 + rng.uniform_int(0, 12);
        const std::size_t n = 1 + rng.uniform_int(0, 12);
        const Matrix a = random_matrix(m, k, rng);
        const Matrix b = random_matrix(k, n, rng);
        const Matrix want = matmul_oracle(a, b);

        check_close(run_gemm_nn(kernels::active_backend(), a, b), want, 1e-13);

        // gemm_tn consumes a stored transposed.
        Matrix at(k, m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < k; ++j) at.at(j, i) = a.at(i, j);
        Matrix c_tn(m, n);
        kernels::ops().gemm_tn(m, n, k, at.data(), b.data(), c_tn.data(), false);
        check_close(c_tn, want, 1e-13);

        // gemm_nt consumes b stored transposed.
        Matrix bt(n, k);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < n; ++j) bt.at(j, i) = b.at(i, j);
        Matrix c_nt(m, n);
        kernels::ops().gemm_nt(m, n, k, a.data(), bt.data(), c_nt.data(), false);
        check_close(c_nt, want, 1e-13);
    }
}

TEST_CASE("gemm accumulate adds instead of overwriting") {
    Rng rng(11);
    const Matrix a = random_matrix(3, 4, rng);
    const Matrix b = random_matrix(4, 5, rng);
    Matrix c = random_matrix(3, 5, rng);
    const Matrix base = c;
    kernels::ops().gemm_nn(3, 5, 4, a.data(), b.data(), c.data(), true);
    const Matrix prod = matmul_oracle(a, b);
    for (std::size_t i = 0; i < c.size(); ++i) {
        CHECK(c.data()[i] == doctest::Approx(base.data()[i] + prod.data()[i]).epsilon(1e-13));
    }
}

TEST_CASE("matmul associativity on random conformable triples") {
    Rng rng(13);
    for (int iter = 0; iter < 30; ++iter) {
        const std::size_t d1 = 1 + rng.uniform_int(0, 9);
        const std::size_t d2 = 1 + rng.uniform_int(0, 9);
        const std::size_t d3 = 1 + rng.uniform_int(0, 9);
        const std::size_t d4 = 1 + rng.uniform_int(0, 9);
        const Matrix a = random_matrix(d1, d2, rng);
        const Matrix b = random_matrix(d2, d3, rng);
        const Matrix c = random_matrix(d3, d4, rng);
        const Matrix left = matmul_oracle(matmul_oracle(a, b), c);
        const Matrix right = matmul_oracle(a, matmul_oracle(b, c));
        check_close(left, right, 1e-9);
        check_close(run_gemm_nn(kernels::active_backend(),
                                run_gemm_nn(kernels::active_backend(), a, b), c),
                    right, 1e-9);
    }
}

TEST_CASE("softmax kernel rows sum to one") {
    Rng rng(17);
    for (int iter = 0; iter < 20; ++iter) {
        const std::size_t r = 1 + rng.uniform_int(0, 7);
        const std::size_t c = 1 + rng.uniform_int(0, 7);
        const Matrix x = random_matrix(r, c, rng, 50.0);
        Matrix y(r, c);
        kernels::ops().softmax_rows(r, c, x.data(), y.data());
        for (std::size_t i = 0; i < r; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
                CHECK(y.at(i, j) >= 0.0);
                sum += y.at(i, j);
            }
            CHECK(std::fabs(sum - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("scalar and AVX2 backends agree") {
    if (!kernels::cpu_supports_avx2()) {
        MESSAGE("AVX2 not available, skipping equivalence checks");
        return;
    }
    const auto& s = kernels::ops_for(kernels::Backend::Scalar);
    const auto& v = kernels::ops_for(kernels::Backend::Avx2);
    Rng rng(23);
    for (int iter = 0; iter < 40; ++iter) {
        const std::size_t m = 1 + rng.uniform_int(0, 16);
        const std::size_t k = 1 + rng.uniform_int(0, 16);
        const std::size_t n = 1 + rng.uniform_int(0, 16);
        const Matrix a = random_matrix(m, k, rng);
        const Matrix b = random_matrix(k, n, rng);
        Matrix cs(m, n), cv(m, n);
        s.gemm_nn(m, n, k, a.data(), b.data(), cs.data(), false);
        v.gemm_nn(m, n, k, a.data(), b.data(), cv.data(), false);
        check_close(cv, cs, 1e-12);

        Matrix bt(n, k);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < n; ++j) bt.at(j, i) = b.at(i, j);
        Matrix ds(m, n), dv(m, n);
        s.gemm_nt(m, n, k, a.data(), bt.data(), ds.data(), false);
        v.gemm_nt(m, n, k, a.data(), bt.data(), dv.data(), false);
        check_close(dv, ds, 1e-12);

        const Matrix x = random_matrix(1, 37, rng, 3.0);
        Matrix ys = x, yv = x;
        s.scale(x.size(), 1.7, ys.data());
        v.scale(x.size(), 1.7, yv.data());
        check_close(yv, ys, 0.0);

        Matrix rs(1, 37), rv(1, 37);
        s.relu(x.size(), x.data(), rs.data());
        v.relu(x.size(), x.data(), rv.data());
        check_close(rv, rs, 0.0);

        CHECK(s.dot(x.size(), x.data(), x.data()) ==
              doctest::Approx(v.dot(x.size(), x.data(), x.data())).epsilon(1e-12));

        Matrix sm_in = random_matrix(5, 11, rng, 20.0);
        Matrix sm_s(5, 11), sm_v(5, 11);
        s.softmax_rows(5, 11, sm_in.data(), sm_s.data());
        v.softmax_rows(5, 11, sm_in.data(), sm_v.data());
        check_close(sm_v, sm_s, 1e-12);
    }
}

TEST_CASE("axpy and relu_backward equivalence") {
    if (!kernels::cpu_supports_avx2()) return;
    const auto& s = kernels::ops_for(kernels::Backend::Scalar);
    const auto& v = kernels::ops_for(kernels::Backend::Avx2);
    Rng rng(29);
    for (int iter = 0; iter < 20; ++iter) {
        const std::size_t n = 1 + rng.uniform_int(0, 40);
        const Matrix x = random_matrix(1, n, rng);
        const Matrix dy = random_matrix(1, n, rng);
        Matrix ys = random_matrix(1, n, rng);
        Matrix yv = ys;
        s.axpy(n, 0.37, x.data(), ys.data());
        v.axpy(n, 0.37, x.data(), yv.data());
        check_close(yv, ys, 1e-13);

        Matrix ds = random_matrix(1, n, rng);
        Matrix dv = ds;
        s.relu_backward(n, x.data(), dy.data(), ds.data());
        v.relu_backward(n, x.data(), dy.data(), dv.data());
        check_close(dv, ds, 0.0);
    }
}
