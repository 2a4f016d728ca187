#include "tlab/kernels.hpp"

#include <algorithm>

// Reference kernels. The i-k-j matmul order fixes the accumulation sequence
// each SIMD variant must reproduce; relu is written as compare-and-select so
// relu(-0.0) == +0.0 matches the AVX2 mask-and idiom bit for bit.

namespace tlab::kernels {
namespace {

void matmul_scalar(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n) {
    std::fill(c, c + m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = arow[kk];
            const double* brow = b + kk * n;
            for (std::size_t j = 0; j < n; ++j) {
                const double t = av * brow[j];
                crow[j] += t;
            }
        }
    }
}

void add_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void hadamard_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void scale_scalar(const double* x, double alpha, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = alpha * x[i];
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double t = alpha * x[i];
        y[i] += t;
    }
}

void relu_scalar(const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_mask_scalar(const double* x, const double* g, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? g[i] : 0.0;
}

void bias_add_scalar(const double* x, const double* b, double* out,
                     std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xrow = x + r * cols;
        double* orow = out + r * cols;
        for (std::size_t c = 0; c < cols; ++c) orow[c] = xrow[c] + b[c];
    }
}

const Ops kScalarOps = {
    matmul_scalar, add_scalar,  sub_scalar,       hadamard_scalar, scale_scalar,
    axpy_scalar,   relu_scalar, relu_mask_scalar, bias_add_scalar,
};

}  // namespace

const Ops& scalar_ops() { return kScalarOps; }

}  // namespace tlab::kernels
