#pragma once

#include <cstddef>
#include <string_view>

namespace tlab::kernels {

// Data-parallel inner loops. Every implementation must be bit-identical to
// the scalar reference: matmul accumulates over k in increasing order with
// separate multiply and add roundings (no FMA), elementwise ops round once
// per element, and relu maps -0.0 to +0.0. Reductions whose result depends
// on summation order are not part of this table.
struct Ops {
    void (*matmul)(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n);
    void (*add)(const double* a, const double* b, double* out, std::size_t n);
    void (*sub)(const double* a, const double* b, double* out, std::size_t n);
    void (*hadamard)(const double* a, const double* b, double* out, std::size_t n);
    void (*scale)(const double* x, double alpha, double* out, std::size_t n);
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    void (*relu)(const double* x, double* out, std::size_t n);
    // out[i] = x[i] > 0 ? g[i] : 0 (the relu backward mask applied to g).
    void (*relu_mask)(const double* x, const double* g, double* out, std::size_t n);
    // out[r][c] = x[r][c] + b[c]
    void (*bias_add)(const double* x, const double* b, double* out,
                     std::size_t rows, std::size_t cols);
};

const Ops& scalar_ops();

// nullptr when AVX2 is not compiled in or the CPU lacks it.
const Ops* avx2_ops();

bool avx2_available();

// The active table; selected once at startup ("auto"), or forced via
// select() / the TLAB_KERNELS environment variable ("scalar", "avx2").
const Ops& active();
void select(std::string_view name);
std::string_view active_name();

}  // namespace tlab::kernels
