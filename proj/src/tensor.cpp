#include "tlab/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tlab/kernels.hpp"

namespace tlab {

std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i > 0) out += "x";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

namespace {

std::size_t shape_size(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
        if (d == 0) throw std::invalid_argument("tensor: zero dimension in shape " + shape_str(shape));
        n *= d;
    }
    return n;
}

}  // namespace

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_size(shape_) != data_.size())
        throw std::invalid_argument("tensor: shape " + shape_str(shape_) + " does not match data length " +
                                    std::to_string(data_.size()));
}

Tensor Tensor::row(std::vector<double> v) {
    Shape s{v.size()};
    return Tensor(std::move(s), std::move(v));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> v) {
    return Tensor({rows, cols}, std::move(v));
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

Tensor Tensor::uniform(Shape shape, double lo, double hi, Rng& rng) {
    Tensor t(std::move(shape));
    for (double& v : t.data()) v = rng.uniform(lo, hi);
    return t;
}

std::size_t Tensor::rows() const {
    if (shape_.size() == 1) return 1;
    if (shape_.size() == 2) return shape_[0];
    throw std::logic_error("tensor: rows() on shape " + shape_str(shape_));
}

std::size_t Tensor::cols() const {
    if (shape_.size() == 1) return shape_[0];
    if (shape_.size() == 2) return shape_[1];
    throw std::logic_error("tensor: cols() on shape " + shape_str(shape_));
}

double Tensor::item() const {
    if (!is_scalar()) throw std::logic_error("tensor: item() on non-scalar shape " + shape_str(shape_));
    return data_[0];
}

std::vector<double>& Tensor::grad() {
    if (!grad_) grad_.emplace(data_.size(), 0.0);
    return *grad_;
}

const std::vector<double>& Tensor::grad() const {
    if (!grad_) throw std::logic_error("tensor: gradient not populated");
    return *grad_;
}

Tensor Tensor::grad_tensor() const { return Tensor(shape_, grad()); }

void Tensor::zero_grad() {
    if (grad_) std::fill(grad_->begin(), grad_->end(), 0.0);
}

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double canonical_sum(std::span<const double> values) {
    static thread_local std::vector<double> scratch;
    scratch.assign(values.begin(), values.end());
    std::sort(scratch.begin(), scratch.end());
    double s = 0.0;
    for (double v : scratch) s += v;
    return s;
}

double sequential_sum(std::span<const double> values) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                                    shape_str(b.shape()));
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.ndim() > 2 || b.ndim() > 2)
        throw std::invalid_argument("matmul: expects 1-D or 2-D operands, got " + shape_str(a.shape()) +
                                    " and " + shape_str(b.shape()));
    const std::size_t m = a.rows(), k = a.cols();
    if (b.ndim() < 2 || b.shape()[0] != k)
        throw std::invalid_argument("matmul: inner dimensions disagree, " + shape_str(a.shape()) + " x " +
                                    shape_str(b.shape()));
    const std::size_t n = b.shape()[1];
    Tensor c(a.ndim() == 1 ? Shape{n} : Shape{m, n});
    kernels::active().matmul(a.data().data(), b.data().data(), c.data().data(), m, k, n);
    return c;
}

Tensor transpose(const Tensor& a) {
    if (a.ndim() != 2) throw std::invalid_argument("transpose: expects 2-D, got " + shape_str(a.shape()));
    const std::size_t m = a.rows(), n = a.cols();
    Tensor t({n, m});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) t.at(j, i) = a.at(i, j);
    return t;
}

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    Tensor out(a.shape());
    kernels::active().add(a.data().data(), b.data().data(), out.data().data(), a.size());
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    Tensor out(a.shape());
    kernels::active().sub(a.data().data(), b.data().data(), out.data().data(), a.size());
    return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "hadamard");
    Tensor out(a.shape());
    kernels::active().hadamard(a.data().data(), b.data().data(), out.data().data(), a.size());
    return out;
}

Tensor scale(const Tensor& a, double alpha) {
    Tensor out(a.shape());
    kernels::active().scale(a.data().data(), alpha, out.data().data(), a.size());
    return out;
}

Tensor relu(const Tensor& a) {
    Tensor out(a.shape());
    kernels::active().relu(a.data().data(), out.data().data(), a.size());
    return out;
}

Tensor softmax_rows(const Tensor& a) {
    if (a.ndim() > 2) throw std::invalid_argument("softmax_rows: expects 1-D or 2-D, got " + shape_str(a.shape()));
    const std::size_t m = a.rows(), n = a.cols();
    Tensor out(a.shape());
    std::vector<double> e(n);
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = a.data().data() + i * n;
        double mx = row[0];
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
        for (std::size_t j = 0; j < n; ++j) e[j] = std::exp(row[j] - mx);
        const double s = canonical_sum(e);
        double* orow = out.data().data() + i * n;
        for (std::size_t j = 0; j < n; ++j) orow[j] = e[j] / s;
    }
    return out;
}

Tensor add_rowvec(const Tensor& x, const Tensor& b) {
    if (b.size() != x.cols())
        throw std::invalid_argument("add_rowvec: bias length " + shape_str(b.shape()) +
                                    " does not match columns of " + shape_str(x.shape()));
    Tensor out(x.shape());
    kernels::active().bias_add(x.data().data(), b.data().data(), out.data().data(), x.rows(), x.cols());
    return out;
}

}  // namespace tlab
