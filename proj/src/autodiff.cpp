#include "tlab/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tlab/kernels.hpp"

namespace tlab {

namespace {

void accum(const Var& v, const double* delta, std::size_t n) {
    kernels::active().axpy(1.0, delta, v->grad().data(), n);
}

void accum(const Var& v, const std::vector<double>& delta) { accum(v, delta.data(), delta.size()); }

}  // namespace

bool Tape::any_requires_grad(const std::vector<Var>& vars) {
    return std::any_of(vars.begin(), vars.end(), [](const Var& v) { return v->requires_grad(); });
}

Var Tape::leaf(Tensor t, bool requires_grad) {
    auto v = std::make_shared<Tensor>(std::move(t));
    v->set_requires_grad(requires_grad);
    v->drop_grad();
    leaves_.push_back(v);
    return v;
}

Var Tape::track(const char* name, Tensor value, std::vector<Var> inputs, std::function<void()> grad_fn) {
    auto out = std::make_shared<Tensor>(std::move(value));
    if (any_requires_grad(inputs)) {
        out->set_requires_grad(true);
        nodes_.push_back(Node{name, std::move(inputs), out, std::move(grad_fn)});
    }
    return out;
}

Var Tape::matmul(const Var& a, const Var& b) {
    Var out = track("matmul", tlab::matmul(*a, *b), {a, b}, nullptr);
    if (out->requires_grad()) {
        nodes_.back().grad_fn = [a, b, out]() {
            const Tensor g = out->grad_tensor();
            if (a->requires_grad()) {
                Tensor ga = tlab::matmul(g, tlab::transpose(*b));
                accum(a, ga.data());
            }
            if (b->requires_grad()) {
                Tensor a2 = a->ndim() == 1 ? Tensor({1, a->size()}, a->data()) : *a;
                Tensor g2 = g.ndim() == 1 ? Tensor({1, g.size()}, g.data()) : g;
                Tensor gb = tlab::matmul(tlab::transpose(a2), g2);
                accum(b, gb.data());
            }
        };
    }
    return out;
}

Var Tape::transpose(const Var& a) {
    Var out = track("transpose", tlab::transpose(*a), {a}, nullptr);
    if (out->requires_grad()) {
        nodes_.back().grad_fn = [a, out]() {
            Tensor gt = tlab::transpose(out->grad_tensor());
            accum(a, gt.data());
        };
    }
    return out;
}

Var Tape::add(const Var& a, const Var& b) {
    check_same_shape(*a, *b, "add");
    Tensor value = tlab::add(*a, *b);
    Var out = track("add", std::move(value), {a, b}, nullptr);
    if (out->requires_grad()) {
        nodes_.back().grad_fn = [a, b, out]() {
            if (a->requires_grad()) accum(a, out->grad());
            if (b->requires_grad()) accum(b, out->grad());
        };
    }
    return out;
}

Var Tape::sub(const Var& a, const Var& b) {
    check_same_shape(*a, *b, "sub");
    Var out = track("sub", tlab::sub(*a, *b), {a, b}, nullptr);
    if (out->requires_grad()) {
        nodes_.back().grad_fn = [a, b, out]() {
            if (a->requires_grad()) accum(a, out->grad());
            if (b->requires_grad())
                kernels::active().axpy(-1.0, out->grad().data(), b->grad().data(), b->size());
        };
    }
    return out;
}

Var Tape::hadamard(const Var& a, const Var& b) {
    check_same_shape(*a, *b, "hadamard");
    Var out = track("hadamard", tlab::hadamard(*a, *b), {a, b}, nullptr);
    if (out->requires_grad()) {
        nodes_.back().grad_fn = [a, b, out]() {
            const std::vector<double>& g = out->grad();
            std::vector<double> tmp(g.size());
            if (a->requires_grad()) {
                kernels::active().hadamard(g.data(), b->data().data(), tmp.data(), g.size());
                accum(a, tmp);
            }
            if (b->requires_grad()) {
                kernels::active().hadamard(g.data(), a->data().data(), tmp.data(), g.size());
                accum(b, tmp);
            }
        };
    }
    return out;
}

Var Tape::scale(const Var& a, double alpha) {
    Var out = track("scale", tlab::scale(*a, alpha), {a}, nullptr);
    if (out->requires_grad()) {
        nodes_.back().grad_fn = [a, alpha, out]() {
            kernels::active().axpy(alpha, out->grad().data(), a->grad().data(), a->size());
        };
    }
    return out;
}

Var Tape::add_rowvec(const Var& x, const Var& b) {
    Tensor value = tlab::add_rowvec(*x, *b);
    Var out = track("add_rowvec", std::move(value), {x, b}, nullptr);
    if (out->requires_grad()) {
        nodes_.back().grad_fn = [x, b, out]() {
            const std::vector<double>& g = out->grad();
            if (x->requires_grad()) accum(x, g);
            if (b->requires_grad()) {
                const std::size_t rows = x->rows(), cols = x->cols();
                std::vector<double>& gb = b->grad();
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < cols; ++c) gb[c] += g[r * cols + c];
            }
        };
    }
    return out;
}

Var Tape::relu(const Var& x) {
    for (double v : x->data()) kinks_.push_back(v > 0.0 ? 1 : 0);
    Var out = track("relu", tlab::relu(*x), {x}, nullptr);
    if (out->requires_grad()) {
        nodes_.back().grad_fn = [x, out]() {
            std::vector<double> tmp(x->size());
            kernels::active().relu_mask(x->data().data(), out->grad().data(), tmp.data(), x->size());
            accum(x, tmp);
        };
    }
    return out;
}

Var Tape::abs(const Var& x) {
    Tensor value(x->shape());
    for (std::size_t i = 0; i < x->size(); ++i) {
        const double v = (*x)[i];
        value[i] = v < 0.0 ? -v : v;
        kinks_.push_back(v > 0.0 ? 1 : (v < 0.0 ? 2 : 0));
    }
    Var out = track("abs", std::move(value), {x}, nullptr);
    if (out->requires_grad()) {
        nodes_.back().grad_fn = [x, out]() {
            const std::vector<double>& g = out->grad();
            std::vector<double>& gx = x->grad();
            for (std::size_t i = 0; i < x->size(); ++i) {
                const double v = (*x)[i];
                // subgradient at 0 is 0, matching the relu convention
                gx[i] += v > 0.0 ? g[i] : (v < 0.0 ? -g[i] : 0.0);
            }
        };
    }
    return out;
}

Var Tape::softmax_rows(const Var& x) {
    Tensor value = tlab::softmax_rows(*x);
    Var out = track("softmax_rows", std::move(value), {x}, nullptr);
    if (out->requires_grad()) {
        nodes_.back().grad_fn = [x, out]() {
            const std::size_t m = out->rows(), n = out->cols();
            const std::vector<double>& y = out->data();
            const std::vector<double>& gy = out->grad();
            std::vector<double>& gx = x->grad();
            for (std::size_t i = 0; i < m; ++i) {
                double dot = 0.0;
                for (std::size_t j = 0; j < n; ++j) dot += gy[i * n + j] * y[i * n + j];
                for (std::size_t j = 0; j < n; ++j)
                    gx[i * n + j] += y[i * n + j] * (gy[i * n + j] - dot);
            }
        };
    }
    return out;
}

Var Tape::sum(const Var& x) {
    Var out = track("sum", Tensor::scalar(sequential_sum(x->data())), {x}, nullptr);
    if (out->requires_grad()) {
        nodes_.back().grad_fn = [x, out]() {
            const double g = out->grad()[0];
            std::vector<double>& gx = x->grad();
            for (double& v : gx) v += g;
        };
    }
    return out;
}

Var Tape::mean(const Var& x) {
    const double inv = 1.0 / static_cast<double>(x->size());
    Var out = track("mean", Tensor::scalar(sequential_sum(x->data()) * inv), {x}, nullptr);
    if (out->requires_grad()) {
        nodes_.back().grad_fn = [x, out, inv]() {
            const double g = out->grad()[0] * inv;
            for (double& v : x->grad()) v += g;
        };
    }
    return out;
}

Var Tape::mean_rows(const Var& x) {
    const std::size_t rows = x->rows(), cols = x->cols();
    Tensor value({1, cols});
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) value[c] += x->at(r, c);
    const double inv = 1.0 / static_cast<double>(rows);
    for (std::size_t c = 0; c < cols; ++c) value[c] *= inv;
    Var out = track("mean_rows", std::move(value), {x}, nullptr);
    if (out->requires_grad()) {
        nodes_.back().grad_fn = [x, out, rows, cols, inv]() {
            const std::vector<double>& g = out->grad();
            std::vector<double>& gx = x->grad();
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c) gx[r * cols + c] += g[c] * inv;
        };
    }
    return out;
}

Var Tape::element(const Var& x, std::size_t flat_index) {
    if (flat_index >= x->size())
        throw std::out_of_range("element: index " + std::to_string(flat_index) + " out of range for " +
                                shape_str(x->shape()));
    Var out = track("element", Tensor::scalar((*x)[flat_index]), {x}, nullptr);
    if (out->requires_grad()) {
        nodes_.back().grad_fn = [x, out, flat_index]() { x->grad()[flat_index] += out->grad()[0]; };
    }
    return out;
}

Var Tape::gather_rows(const Var& table, std::vector<std::size_t> ids) {
    const std::size_t cols = table->cols();
    for (std::size_t id : ids)
        if (id >= table->rows())
            throw std::out_of_range("gather_rows: row " + std::to_string(id) + " out of range for " +
                                    shape_str(table->shape()));
    Tensor value({ids.size(), cols});
    for (std::size_t i = 0; i < ids.size(); ++i)
        std::copy_n(table->data().begin() + ids[i] * cols, cols, value.data().begin() + i * cols);
    Var out = track("gather_rows", std::move(value), {table}, nullptr);
    if (out->requires_grad()) {
        nodes_.back().grad_fn = [table, out, ids = std::move(ids), cols]() {
            const std::vector<double>& g = out->grad();
            std::vector<double>& gt = table->grad();
            for (std::size_t i = 0; i < ids.size(); ++i)
                for (std::size_t c = 0; c < cols; ++c) gt[ids[i] * cols + c] += g[i * cols + c];
        };
    }
    return out;
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
    const std::size_t rows = parts[0]->rows();
    std::size_t total = 0;
    for (const Var& p : parts) {
        if (p->rows() != rows)
            throw std::invalid_argument("concat_cols: row mismatch " + shape_str(p->shape()));
        total += p->cols();
    }
    Tensor value({rows, total});
    std::size_t off = 0;
    for (const Var& p : parts) {
        const std::size_t pc = p->cols();
        for (std::size_t r = 0; r < rows; ++r)
            std::copy_n(p->data().begin() + r * pc, pc, value.data().begin() + r * total + off);
        off += pc;
    }
    Var out = track("concat_cols", std::move(value), parts, nullptr);
    if (out->requires_grad()) {
        nodes_.back().grad_fn = [parts, out, rows, total]() {
            const std::vector<double>& g = out->grad();
            std::size_t off = 0;
            for (const Var& p : parts) {
                const std::size_t pc = p->cols();
                if (p->requires_grad()) {
                    std::vector<double>& gp = p->grad();
                    for (std::size_t r = 0; r < rows; ++r)
                        for (std::size_t c = 0; c < pc; ++c) gp[r * pc + c] += g[r * total + off + c];
                }
                off += pc;
            }
        };
    }
    return out;
}

Var Tape::dropout(const Var& x, double rate, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0)
        throw std::invalid_argument("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
    const double keep_scale = 1.0 / (1.0 - rate);
    auto mask = std::make_shared<std::vector<double>>(x->size());
    Tensor value(x->shape());
    for (std::size_t i = 0; i < x->size(); ++i) {
        (*mask)[i] = rng.uniform() < rate ? 0.0 : keep_scale;
        value[i] = (*x)[i] * (*mask)[i];
    }
    Var out = track("dropout", std::move(value), {x}, nullptr);
    if (out->requires_grad()) {
        nodes_.back().grad_fn = [x, out, mask]() {
            std::vector<double> tmp(x->size());
            kernels::active().hadamard(out->grad().data(), mask->data(), tmp.data(), x->size());
            accum(x, tmp);
        };
    }
    return out;
}

Var Tape::cross_entropy_rows(const Var& logits, std::vector<std::size_t> targets) {
    const std::size_t m = logits->rows(), n = logits->cols();
    if (targets.size() != m)
        throw std::invalid_argument("cross_entropy_rows: " + std::to_string(targets.size()) +
                                    " targets for " + std::to_string(m) + " rows");
    for (std::size_t t : targets)
        if (t >= n) throw std::out_of_range("cross_entropy_rows: target class out of range");
    std::vector<double> e(n);
    double loss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = logits->data().data() + i * n;
        double mx = row[0];
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
        for (std::size_t j = 0; j < n; ++j) e[j] = std::exp(row[j] - mx);
        loss += mx + std::log(canonical_sum(e)) - row[targets[i]];
    }
    loss /= static_cast<double>(m);
    Var out = track("cross_entropy_rows", Tensor::scalar(loss), {logits}, nullptr);
    if (out->requires_grad()) {
        nodes_.back().grad_fn = [logits, out, targets = std::move(targets), m, n]() {
            const double g = out->grad()[0] / static_cast<double>(m);
            Tensor probs = tlab::softmax_rows(*logits);
            std::vector<double>& gl = logits->grad();
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < n; ++j) gl[i * n + j] += g * probs.at(i, j);
                gl[i * n + targets[i]] -= g;
            }
        };
    }
    return out;
}

Var Tape::bce_with_logits(const Var& logits, std::vector<double> labels) {
    const std::size_t m = logits->size();
    if (labels.size() != m)
        throw std::invalid_argument("bce_with_logits: label count mismatch");
    double loss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double z = (*logits)[i];
        // max(z,0) - z*y + log(1 + exp(-|z|))
        loss += std::max(z, 0.0) - z * labels[i] + std::log1p(std::exp(-std::fabs(z)));
    }
    loss /= static_cast<double>(m);
    Var out = track("bce_with_logits", Tensor::scalar(loss), {logits}, nullptr);
    if (out->requires_grad()) {
        nodes_.back().grad_fn = [logits, out, labels = std::move(labels), m]() {
            const double g = out->grad()[0] / static_cast<double>(m);
            std::vector<double>& gl = logits->grad();
            for (std::size_t i = 0; i < m; ++i) {
                const double z = (*logits)[i];
                const double sig = 1.0 / (1.0 + std::exp(-z));
                gl[i] += g * (sig - labels[i]);
            }
        };
    }
    return out;
}

Var Tape::pairwise_sqdist(const Var& p) {
    const std::size_t L = p->rows(), r = p->cols();
    Tensor value({L, L});
    for (std::size_t i = 0; i < L; ++i)
        for (std::size_t j = 0; j < L; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < r; ++c) {
                const double d = p->at(i, c) - p->at(j, c);
                s += d * d;
            }
            value.at(i, j) = s;
        }
    Var out = track("pairwise_sqdist", std::move(value), {p}, nullptr);
    if (out->requires_grad()) {
        nodes_.back().grad_fn = [p, out, L, r]() {
            const std::vector<double>& g = out->grad();
            std::vector<double>& gp = p->grad();
            for (std::size_t i = 0; i < L; ++i)
                for (std::size_t j = 0; j < L; ++j) {
                    const double gij = g[i * L + j];
                    if (gij == 0.0) continue;
                    for (std::size_t c = 0; c < r; ++c) {
                        const double d = 2.0 * (p->at(i, c) - p->at(j, c)) * gij;
                        gp[i * r + c] += d;
                        gp[j * r + c] -= d;
                    }
                }
        };
    }
    return out;
}

Var Tape::attn_combine(const Var& w, const Var& v) {
    const std::size_t s = w->rows(), ctx = w->cols();
    if (v->rows() != ctx)
        throw std::invalid_argument("attn_combine: weights " + shape_str(w->shape()) +
                                    " do not match values " + shape_str(v->shape()));
    const std::size_t h = v->cols();
    Tensor value({s, h});
    std::vector<double> terms(ctx);
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t j = 0; j < h; ++j) {
            for (std::size_t a = 0; a < ctx; ++a) terms[a] = w->at(i, a) * v->at(a, j);
            value.at(i, j) = canonical_sum(terms);
        }
    Var out = track("attn_combine", std::move(value), {w, v}, nullptr);
    if (out->requires_grad()) {
        nodes_.back().grad_fn = [w, v, out]() {
            const Tensor g = out->grad_tensor();
            if (w->requires_grad()) {
                Tensor gw = tlab::matmul(g, tlab::transpose(*v));
                accum(w, gw.data());
            }
            if (v->requires_grad()) {
                Tensor gv = tlab::matmul(tlab::transpose(*w), g);
                accum(v, gv.data());
            }
        };
    }
    return out;
}

Var Tape::block_norm_train(const Var& x, const Var& gain, const Var& bias, double eps,
                           Tensor* batch_mean, Tensor* batch_var) {
    const std::size_t B = x->rows(), w = x->cols();
    if (B < 2) throw std::invalid_argument("block_norm: training batch must have at least 2 rows");
    if (gain->size() != w || bias->size() != w)
        throw std::invalid_argument("block_norm: gain/bias width mismatch");
    Tensor mu({w}), var({w});
    for (std::size_t c = 0; c < w; ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < B; ++r) s += x->at(r, c);
        mu[c] = s / static_cast<double>(B);
        double v = 0.0;
        for (std::size_t r = 0; r < B; ++r) {
            const double d = x->at(r, c) - mu[c];
            v += d * d;
        }
        var[c] = v / static_cast<double>(B);
    }
    auto xhat = std::make_shared<Tensor>(Shape{B, w});
    auto invstd = std::make_shared<std::vector<double>>(w);
    Tensor value({B, w});
    for (std::size_t c = 0; c < w; ++c) {
        (*invstd)[c] = 1.0 / std::sqrt(var[c] + eps);
        for (std::size_t r = 0; r < B; ++r) {
            xhat->at(r, c) = (x->at(r, c) - mu[c]) * (*invstd)[c];
            value.at(r, c) = (*gain)[c] * xhat->at(r, c) + (*bias)[c];
        }
    }
    if (batch_mean != nullptr) *batch_mean = mu;
    if (batch_var != nullptr) *batch_var = var;
    Var out = track("block_norm_train", std::move(value), {x, gain, bias}, nullptr);
    if (out->requires_grad()) {
        nodes_.back().grad_fn = [x, gain, bias, out, xhat, invstd, B, w]() {
            const std::vector<double>& g = out->grad();
            for (std::size_t c = 0; c < w; ++c) {
                double sum_g = 0.0, sum_gx = 0.0;
                for (std::size_t r = 0; r < B; ++r) {
                    sum_g += g[r * w + c];
                    sum_gx += g[r * w + c] * xhat->at(r, c);
                }
                if (gain->requires_grad()) gain->grad()[c] += sum_gx;
                if (bias->requires_grad()) bias->grad()[c] += sum_g;
                if (x->requires_grad()) {
                    const double gn = (*gain)[c], is = (*invstd)[c];
                    const double invB = 1.0 / static_cast<double>(B);
                    for (std::size_t r = 0; r < B; ++r) {
                        const double gh = g[r * w + c] * gn;
                        x->grad()[r * w + c] +=
                            is * (gh - invB * (sum_g * gn + xhat->at(r, c) * sum_gx * gn));
                    }
                }
            }
        };
    }
    return out;
}

Var Tape::block_norm_eval(const Var& x, const Var& gain, const Var& bias,
                          const Tensor& running_mean, const Tensor& running_var, double eps) {
    const std::size_t B = x->rows(), w = x->cols();
    if (gain->size() != w || bias->size() != w || running_mean.size() != w || running_var.size() != w)
        throw std::invalid_argument("block_norm: width mismatch");
    auto invstd = std::make_shared<std::vector<double>>(w);
    auto mean = std::make_shared<std::vector<double>>(running_mean.data());
    for (std::size_t c = 0; c < w; ++c) (*invstd)[c] = 1.0 / std::sqrt(running_var[c] + eps);
    Tensor value({B, w});
    for (std::size_t r = 0; r < B; ++r)
        for (std::size_t c = 0; c < w; ++c)
            value.at(r, c) = (*gain)[c] * ((x->at(r, c) - (*mean)[c]) * (*invstd)[c]) + (*bias)[c];
    Var out = track("block_norm_eval", std::move(value), {x, gain, bias}, nullptr);
    if (out->requires_grad()) {
        nodes_.back().grad_fn = [x, gain, bias, out, invstd, mean, B, w]() {
            const std::vector<double>& g = out->grad();
            for (std::size_t c = 0; c < w; ++c) {
                const double is = (*invstd)[c];
                double sum_g = 0.0, sum_gxhat = 0.0;
                for (std::size_t r = 0; r < B; ++r) {
                    sum_g += g[r * w + c];
                    sum_gxhat += g[r * w + c] * (x->at(r, c) - (*mean)[c]) * is;
                }
                if (gain->requires_grad()) gain->grad()[c] += sum_gxhat;
                if (bias->requires_grad()) bias->grad()[c] += sum_g;
                if (x->requires_grad()) {
                    const double k = (*gain)[c] * is;
                    for (std::size_t r = 0; r < B; ++r) x->grad()[r * w + c] += g[r * w + c] * k;
                }
            }
        };
    }
    return out;
}

void Tape::backward(const Var& loss) {
    if (!loss->is_scalar())
        throw std::invalid_argument("backward: loss must be scalar, got " + shape_str(loss->shape()));
    loss->grad()[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        if (!it->output->has_grad()) continue;
        for (const Var& in : it->inputs)
            if (in->requires_grad()) in->grad();  // allocate before accumulation
        it->grad_fn();
    }
    for (const Var& l : leaves_)
        if (l->requires_grad() && !l->has_grad()) l->grad();
}

}  // namespace tlab
