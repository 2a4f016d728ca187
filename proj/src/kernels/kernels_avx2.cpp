#include "tlab/kernels.hpp"

#ifdef TLAB_HAVE_AVX2

#include <immintrin.h>

#include <algorithm>

// AVX2 variants. Vector lanes cover the j (column) index so each output
// element sees the same k-ordered mul-then-add sequence as the scalar
// reference; _mm256_mul_pd/_mm256_add_pd keep the two roundings separate.
// relu uses cmp_gt + and so -0.0 maps to +0.0 exactly as the reference does.

namespace tlab::kernels {
namespace {

void matmul_avx2(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n) {
    std::fill(c, c + m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = arow[kk];
            const double* brow = b + kk * n;
            const __m256d avv = _mm256_set1_pd(av);
            std::size_t j = 0;
            for (; j + 4 <= n; j += 4) {
                const __m256d bv = _mm256_loadu_pd(brow + j);
                const __m256d cv = _mm256_loadu_pd(crow + j);
                _mm256_storeu_pd(crow + j, _mm256_add_pd(cv, _mm256_mul_pd(avv, bv)));
            }
            for (; j < n; ++j) {
                const double t = av * brow[j];
                crow[j] += t;
            }
        }
    }
}

void add_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

void hadamard_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void scale_avx2(const double* x, double alpha, double* out, std::size_t n) {
    const __m256d av = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) out[i] = alpha * x[i];
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d av = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d t = _mm256_mul_pd(av, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), t));
    }
    for (; i < n; ++i) {
        const double t = alpha * x[i];
        y[i] += t;
    }
}

void relu_avx2(const double* x, double* out, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d xv = _mm256_loadu_pd(x + i);
        const __m256d mask = _mm256_cmp_pd(xv, zero, _CMP_GT_OQ);
        _mm256_storeu_pd(out + i, _mm256_and_pd(mask, xv));
    }
    for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_mask_avx2(const double* x, const double* g, double* out, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
        _mm256_storeu_pd(out + i, _mm256_and_pd(mask, _mm256_loadu_pd(g + i)));
    }
    for (; i < n; ++i) out[i] = x[i] > 0.0 ? g[i] : 0.0;
}

void bias_add_avx2(const double* x, const double* b, double* out,
                   std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xrow = x + r * cols;
        double* orow = out + r * cols;
        std::size_t c = 0;
        for (; c + 4 <= cols; c += 4)
            _mm256_storeu_pd(orow + c,
                             _mm256_add_pd(_mm256_loadu_pd(xrow + c), _mm256_loadu_pd(b + c)));
        for (; c < cols; ++c) orow[c] = xrow[c] + b[c];
    }
}

const Ops kAvx2Ops = {
    matmul_avx2, add_avx2,  sub_avx2,       hadamard_avx2, scale_avx2,
    axpy_avx2,   relu_avx2, relu_mask_avx2, bias_add_avx2,
};

}  // namespace

const Ops* avx2_ops_impl() { return &kAvx2Ops; }

}  // namespace tlab::kernels

#endif  // TLAB_HAVE_AVX2
