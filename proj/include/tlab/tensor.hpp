#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tlab/rng.hpp"

namespace tlab {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);

// Dense row-major tensor of 64-bit floats; the universal value carrier.
// grad, when allocated, always has the same length as data.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
    static Tensor full(Shape shape, double v) { return Tensor(std::move(shape), v); }
    static Tensor scalar(double v) { return Tensor({1}, std::vector<double>{v}); }
    static Tensor row(std::vector<double> v);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> v);
    static Tensor identity(std::size_t n);
    static Tensor uniform(Shape shape, double lo, double hi, Rng& rng);

    const Shape& shape() const { return shape_; }
    std::size_t ndim() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool is_scalar() const { return data_.size() == 1; }

    // 2-D accessors; ndim()==1 counts as a single row.
    std::size_t rows() const;
    std::size_t cols() const;

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }
    double item() const;

    bool requires_grad() const { return requires_grad_; }
    void set_requires_grad(bool v) { requires_grad_ = v; }

    bool has_grad() const { return grad_.has_value(); }
    // Allocates a zero gradient on first use.
    std::vector<double>& grad();
    const std::vector<double>& grad() const;
    Tensor grad_tensor() const;
    void zero_grad();
    void drop_grad() { grad_.reset(); }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

private:
    Shape shape_;
    std::vector<double> data_;
    bool requires_grad_ = false;
    std::optional<std::vector<double>> grad_;
};

// Sums values in ascending value order: the result is invariant under any
// permutation of the input, which attention relies on for exact context
// permutation equivariance.
double canonical_sum(std::span<const double> values);

double sequential_sum(std::span<const double> values);

// --- plain (non-recording) tensor arithmetic, all built on the kernel table ---

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double alpha);
Tensor relu(const Tensor& a);
// Row-stable softmax: max subtraction, exp, canonical-order sum, divide.
Tensor softmax_rows(const Tensor& a);
// x + b broadcast over rows; b has cols(x) entries.
Tensor add_rowvec(const Tensor& x, const Tensor& b);

void check_same_shape(const Tensor& a, const Tensor& b, const char* op);

}  // namespace tlab
