#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "tlab/rng.hpp"
#include "tlab/tensor.hpp"

namespace tlab {

using Var = std::shared_ptr<Tensor>;

// Records every executed operation, in order, with the tensors it touched,
// and replays the chain rule over the log in reverse. Ops only record when
// some input requires a gradient; forward values are computed either way, so
// the same code path serves training and plain evaluation.
class Tape {
public:
    Var leaf(Tensor t, bool requires_grad = true);
    Var constant(Tensor t) { return std::make_shared<Tensor>(std::move(t)); }

    Var matmul(const Var& a, const Var& b);
    Var transpose(const Var& a);
    Var add(const Var& a, const Var& b);
    Var sub(const Var& a, const Var& b);
    Var hadamard(const Var& a, const Var& b);
    Var scale(const Var& a, double alpha);
    Var add_rowvec(const Var& x, const Var& b);
    Var relu(const Var& x);
    Var abs(const Var& x);
    Var softmax_rows(const Var& x);
    Var sum(const Var& x);
    Var mean(const Var& x);
    Var mean_rows(const Var& x);
    Var element(const Var& x, std::size_t flat_index);
    Var gather_rows(const Var& table, std::vector<std::size_t> ids);
    Var concat_cols(const std::vector<Var>& parts);
    // Inverted dropout: survivors scale by 1/(1-rate); identity when rate == 0.
    Var dropout(const Var& x, double rate, Rng& rng);
    // Mean negative log-likelihood over rows of stable log-softmax.
    Var cross_entropy_rows(const Var& logits, std::vector<std::size_t> targets);
    // Mean binary cross-entropy with logits (stable softplus form).
    Var bce_with_logits(const Var& logits, std::vector<double> labels);
    // D[i][j] = squared euclidean distance between rows i and j of p.
    Var pairwise_sqdist(const Var& p);
    // out = w.v with each output element summed in canonical (value) order,
    // so attention output is bit-exact under context permutation.
    Var attn_combine(const Var& w, const Var& v);
    // Batch standardization with learned gain/bias; batch statistics are
    // written to *batch_mean / *batch_var for the caller's running update.
    Var block_norm_train(const Var& x, const Var& gain, const Var& bias, double eps,
                         Tensor* batch_mean = nullptr, Tensor* batch_var = nullptr);
    Var block_norm_eval(const Var& x, const Var& gain, const Var& bias,
                        const Tensor& running_mean, const Tensor& running_var, double eps);

    // Populates grads of every requires_grad leaf reachable from loss;
    // unreachable leaves get zero grads. loss must be scalar.
    void backward(const Var& loss);

    std::size_t num_ops() const { return nodes_.size(); }

    // One byte per relu/abs element evaluated, in execution order. Two
    // evaluations of a deterministic function land in the same linear cell
    // iff their signatures are equal; the finite-difference checker uses
    // this to skip parameters sitting within epsilon of a kink.
    const std::vector<std::uint8_t>& kink_signature() const { return kinks_; }

private:
    struct Node {
        const char* name;
        std::vector<Var> inputs;
        Var output;
        std::function<void()> grad_fn;
    };

    Var track(const char* name, Tensor value, std::vector<Var> inputs, std::function<void()> grad_fn);
    static bool any_requires_grad(const std::vector<Var>& vars);

    std::vector<Node> nodes_;
    std::vector<Var> leaves_;
    std::vector<std::uint8_t> kinks_;
};

}  // namespace tlab
