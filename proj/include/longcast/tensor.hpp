#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "longcast/errors.hpp"

namespace longcast {

// Dense row-major tensors with reverse-mode differentiation. The graph is a
// dynamic tape: every op allocates a fresh node holding its value, its parent
// handles, and a closure that pushes gradient into the parents. backward()
// walks the tape in reverse topological order. Gradient accumulation is
// additive; callers zero grads explicitly between steps.
//
// Element type S is float by default; instantiate with double for tight
// gradient-check tolerances. No broadcasting beyond row-wise bias add.

template <class S>
struct TensorNode {
    std::vector<std::size_t> shape;
    std::vector<S> value;
    std::vector<S> grad;  // allocated only when requires_grad
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorNode<S>>> parents;
    std::function<void(TensorNode<S>&)> backprop;

    std::size_t numel() const { return value.size(); }
    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), S(0));
    }
};

inline std::string shape_str(const std::vector<std::size_t>& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << "]";
    return os.str();
}

template <class S>
struct TensorT {
    std::shared_ptr<TensorNode<S>> n;

    TensorT() = default;
    explicit TensorT(std::shared_ptr<TensorNode<S>> node) : n(std::move(node)) {}

    static std::size_t count(const std::vector<std::size_t>& shape) {
        std::size_t c = 1;
        for (std::size_t e : shape) c *= e;
        return c;
    }

    static TensorT zeros(std::vector<std::size_t> shape, bool requires_grad = false) {
        auto node = std::make_shared<TensorNode<S>>();
        node->value.assign(count(shape), S(0));
        node->shape = std::move(shape);
        node->requires_grad = requires_grad;
        if (requires_grad) node->ensure_grad();
        return TensorT(std::move(node));
    }

    static TensorT from(std::vector<std::size_t> shape, std::vector<S> data, bool requires_grad = false) {
        if (count(shape) != data.size())
            throw DimensionError("tensor data length " + std::to_string(data.size()) +
                                 " does not match shape " + shape_str(shape));
        auto node = std::make_shared<TensorNode<S>>();
        node->shape = std::move(shape);
        node->value = std::move(data);
        node->requires_grad = requires_grad;
        if (requires_grad) node->ensure_grad();
        return TensorT(std::move(node));
    }

    static TensorT scalar(S v) { return from({1}, {v}); }

    bool defined() const { return n != nullptr; }
    const std::vector<std::size_t>& shape() const { return n->shape; }
    std::size_t numel() const { return n->numel(); }
    std::size_t rank() const { return n->shape.size(); }
    std::size_t rows() const { return n->shape.at(0); }
    std::size_t cols() const { return n->shape.size() > 1 ? n->shape.at(1) : 1; }
    S* data() { return n->value.data(); }
    const S* data() const { return n->value.data(); }
    std::vector<S>& values() { return n->value; }
    const std::vector<S>& values() const { return n->value; }
    bool requires_grad() const { return n->requires_grad; }
    std::vector<S>& grad() { return n->grad; }
    const std::vector<S>& grad() const { return n->grad; }
    S item() const {
        if (numel() != 1) throw ContractError("item() on tensor of shape " + shape_str(n->shape));
        return n->value[0];
    }

    void zero_grad() {
        if (n->requires_grad) n->grad.assign(n->value.size(), S(0));
    }

    // Detached copy of the current values (no graph edge).
    TensorT detach() const { return from(n->shape, n->value, false); }
};

namespace detail {

template <class S>
TensorT<S> make_result(std::vector<std::size_t> shape, std::vector<TensorT<S>> parents) {
    auto node = std::make_shared<TensorNode<S>>();
    node->value.assign(TensorT<S>::count(shape), S(0));
    node->shape = std::move(shape);
    for (auto& p : parents) {
        node->requires_grad = node->requires_grad || p.n->requires_grad;
        node->parents.push_back(p.n);
    }
    return TensorT<S>(std::move(node));
}

template <class S>
void require_2d(const TensorT<S>& t, const char* who) {
    if (t.rank() != 2) throw DimensionError(std::string(who) + " expects a 2-D tensor, got " + shape_str(t.shape()));
}

// c[m x n] += a[m x k] * b[k x n]
template <class S>
void gemm_acc(const S* a, const S* b, S* c, std::size_t m, std::size_t k, std::size_t nn) {
    for (std::size_t i = 0; i < m; ++i) {
        const S* arow = a + i * k;
        S* crow = c + i * nn;
        for (std::size_t p = 0; p < k; ++p) {
            const S aip = arow[p];
            if (aip == S(0)) continue;
            const S* brow = b + p * nn;
            for (std::size_t j = 0; j < nn; ++j) crow[j] += aip * brow[j];
        }
    }
}

// c[m x n] += a[m x k] * b'[n x k]  (b transposed)
template <class S>
void gemm_bt_acc(const S* a, const S* b, S* c, std::size_t m, std::size_t k, std::size_t nn) {
    for (std::size_t i = 0; i < m; ++i) {
        const S* arow = a + i * k;
        S* crow = c + i * nn;
        for (std::size_t j = 0; j < nn; ++j) {
            const S* brow = b + j * k;
            S acc = S(0);
            for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            crow[j] += acc;
        }
    }
}

// c[k x n] += a'[m x k] * b[m x n]  (a transposed)
template <class S>
void gemm_at_acc(const S* a, const S* b, S* c, std::size_t m, std::size_t k, std::size_t nn) {
    for (std::size_t i = 0; i < m; ++i) {
        const S* arow = a + i * k;
        const S* brow = b + i * nn;
        for (std::size_t p = 0; p < k; ++p) {
            const S aip = arow[p];
            if (aip == S(0)) continue;
            S* crow = c + p * nn;
            for (std::size_t j = 0; j < nn; ++j) crow[j] += aip * brow[j];
        }
    }
}

}  // namespace detail

// ---- ops ----

template <class S>
TensorT<S> matmul(const TensorT<S>& a, const TensorT<S>& b) {
    detail::require_2d(a, "matmul");
    detail::require_2d(b, "matmul");
    const std::size_t m = a.shape()[0], k = a.shape()[1];
    if (b.shape()[0] != k)
        throw DimensionError("matmul inner extents differ: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    const std::size_t nn = b.shape()[1];
    auto out = detail::make_result<S>({m, nn}, {a, b});
    detail::gemm_acc(a.data(), b.data(), out.data(), m, k, nn);
    if (out.requires_grad()) {
        out.n->backprop = [m, k, nn](TensorNode<S>& self) {
            auto& pa = *self.parents[0];
            auto& pb = *self.parents[1];
            if (pa.requires_grad) {
                pa.ensure_grad();
                detail::gemm_bt_acc(self.grad.data(), pb.value.data(), pa.grad.data(), m, nn, k);
            }
            if (pb.requires_grad) {
                pb.ensure_grad();
                detail::gemm_at_acc(pa.value.data(), self.grad.data(), pb.grad.data(), m, k, nn);
            }
        };
    }
    return out;
}

template <class S>
TensorT<S> add(const TensorT<S>& a, const TensorT<S>& b) {
    if (a.shape() != b.shape())
        throw DimensionError("add shapes differ: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    auto out = detail::make_result<S>(a.shape(), {a, b});
    for (std::size_t i = 0; i < out.numel(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
    if (out.requires_grad()) {
        out.n->backprop = [](TensorNode<S>& self) {
            for (int side = 0; side < 2; ++side) {
                auto& p = *self.parents[static_cast<std::size_t>(side)];
                if (!p.requires_grad) continue;
                p.ensure_grad();
                for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i];
            }
        };
    }
    return out;
}

template <class S>
TensorT<S> sub(const TensorT<S>& a, const TensorT<S>& b) {
    if (a.shape() != b.shape())
        throw DimensionError("sub shapes differ: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    auto out = detail::make_result<S>(a.shape(), {a, b});
    for (std::size_t i = 0; i < out.numel(); ++i) out.data()[i] = a.data()[i] - b.data()[i];
    if (out.requires_grad()) {
        out.n->backprop = [](TensorNode<S>& self) {
            auto& pa = *self.parents[0];
            auto& pb = *self.parents[1];
            if (pa.requires_grad) {
                pa.ensure_grad();
                for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i];
            }
            if (pb.requires_grad) {
                pb.ensure_grad();
                for (std::size_t i = 0; i < self.grad.size(); ++i) pb.grad[i] -= self.grad[i];
            }
        };
    }
    return out;
}

template <class S>
TensorT<S> mul(const TensorT<S>& a, const TensorT<S>& b) {
    if (a.shape() != b.shape())
        throw DimensionError("mul shapes differ: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    auto out = detail::make_result<S>(a.shape(), {a, b});
    for (std::size_t i = 0; i < out.numel(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
    if (out.requires_grad()) {
        out.n->backprop = [](TensorNode<S>& self) {
            auto& pa = *self.parents[0];
            auto& pb = *self.parents[1];
            if (pa.requires_grad) {
                pa.ensure_grad();
                for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i] * pb.value[i];
            }
            if (pb.requires_grad) {
                pb.ensure_grad();
                for (std::size_t i = 0; i < self.grad.size(); ++i) pb.grad[i] += self.grad[i] * pa.value[i];
            }
        };
    }
    return out;
}

template <class S>
TensorT<S> scale(const TensorT<S>& a, S c) {
    auto out = detail::make_result<S>(a.shape(), {a});
    for (std::size_t i = 0; i < out.numel(); ++i) out.data()[i] = a.data()[i] * c;
    if (out.requires_grad()) {
        out.n->backprop = [c](TensorNode<S>& self) {
            auto& pa = *self.parents[0];
            pa.ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i] * c;
        };
    }
    return out;
}

// a[m x n] + bias[n] broadcast over rows; the only broadcast the library does
template <class S>
TensorT<S> add_bias(const TensorT<S>& a, const TensorT<S>& bias) {
    detail::require_2d(a, "add_bias");
    const std::size_t m = a.shape()[0], nn = a.shape()[1];
    if (bias.numel() != nn)
        throw DimensionError("add_bias: bias " + shape_str(bias.shape()) + " vs matrix " + shape_str(a.shape()));
    auto out = detail::make_result<S>(a.shape(), {a, bias});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < nn; ++j) out.data()[i * nn + j] = a.data()[i * nn + j] + bias.data()[j];
    if (out.requires_grad()) {
        out.n->backprop = [m, nn](TensorNode<S>& self) {
            auto& pa = *self.parents[0];
            auto& pb = *self.parents[1];
            if (pa.requires_grad) {
                pa.ensure_grad();
                for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i];
            }
            if (pb.requires_grad) {
                pb.ensure_grad();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < nn; ++j) pb.grad[j] += self.grad[i * nn + j];
            }
        };
    }
    return out;
}

template <class S>
TensorT<S> transpose(const TensorT<S>& a) {
    detail::require_2d(a, "transpose");
    const std::size_t m = a.shape()[0], nn = a.shape()[1];
    auto out = detail::make_result<S>({nn, m}, {a});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < nn; ++j) out.data()[j * m + i] = a.data()[i * nn + j];
    if (out.requires_grad()) {
        out.n->backprop = [m, nn](TensorNode<S>& self) {
            auto& pa = *self.parents[0];
            pa.ensure_grad();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < nn; ++j) pa.grad[i * nn + j] += self.grad[j * m + i];
        };
    }
    return out;
}

// Row-wise softmax, stabilized by row-max subtraction.
template <class S>
TensorT<S> softmax_rows(const TensorT<S>& a) {
    detail::require_2d(a, "softmax_rows");
    for (std::size_t i = 0; i < a.numel(); ++i)
        if (std::isnan(static_cast<double>(a.data()[i]))) throw NumericError("softmax_rows: NaN input");
    const std::size_t m = a.shape()[0], nn = a.shape()[1];
    auto out = detail::make_result<S>(a.shape(), {a});
    for (std::size_t i = 0; i < m; ++i) {
        const S* row = a.data() + i * nn;
        S* orow = out.data() + i * nn;
        S mx = row[0];
        for (std::size_t j = 1; j < nn; ++j) mx = std::max(mx, row[j]);
        S sum = S(0);
        for (std::size_t j = 0; j < nn; ++j) {
            orow[j] = std::exp(row[j] - mx);
            sum += orow[j];
        }
        for (std::size_t j = 0; j < nn; ++j) orow[j] /= sum;
    }
    if (out.requires_grad()) {
        out.n->backprop = [m, nn](TensorNode<S>& self) {
            auto& pa = *self.parents[0];
            pa.ensure_grad();
            for (std::size_t i = 0; i < m; ++i) {
                const S* y = self.value.data() + i * nn;
                const S* dy = self.grad.data() + i * nn;
                S dot = S(0);
                for (std::size_t j = 0; j < nn; ++j) dot += dy[j] * y[j];
                S* dx = pa.grad.data() + i * nn;
                for (std::size_t j = 0; j < nn; ++j) dx[j] += y[j] * (dy[j] - dot);
            }
        };
    }
    return out;
}

// GELU, tanh approximation (the GPT-2/BERT activation).
template <class S>
TensorT<S> gelu(const TensorT<S>& a) {
    auto out = detail::make_result<S>(a.shape(), {a});
    const S c = S(0.7978845608028654);  // sqrt(2/pi)
    const S k = S(0.044715);
    for (std::size_t i = 0; i < a.numel(); ++i) {
        const S x = a.data()[i];
        const S t = std::tanh(c * (x + k * x * x * x));
        out.data()[i] = S(0.5) * x * (S(1) + t);
    }
    if (out.requires_grad()) {
        out.n->backprop = [c, k](TensorNode<S>& self) {
            auto& pa = *self.parents[0];
            pa.ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                const S x = pa.value[i];
                const S u = c * (x + k * x * x * x);
                const S t = std::tanh(u);
                const S d = S(0.5) * (S(1) + t) + S(0.5) * x * (S(1) - t * t) * c * (S(1) + S(3) * k * x * x);
                pa.grad[i] += self.grad[i] * d;
            }
        };
    }
    return out;
}

// Row-wise layer norm with affine (population variance, eps inside the sqrt).
template <class S>
TensorT<S> layer_norm(const TensorT<S>& x, const TensorT<S>& gamma, const TensorT<S>& beta, S eps = S(1e-5)) {
    detail::require_2d(x, "layer_norm");
    const std::size_t m = x.shape()[0], nn = x.shape()[1];
    if (gamma.numel() != nn || beta.numel() != nn)
        throw DimensionError("layer_norm affine params must have length " + std::to_string(nn));
    auto out = detail::make_result<S>(x.shape(), {x, gamma, beta});
    std::vector<S> inv_sd(m), means(m);
    for (std::size_t i = 0; i < m; ++i) {
        const S* row = x.data() + i * nn;
        S mu = S(0);
        for (std::size_t j = 0; j < nn; ++j) mu += row[j];
        mu /= S(nn);
        S var = S(0);
        for (std::size_t j = 0; j < nn; ++j) var += (row[j] - mu) * (row[j] - mu);
        var /= S(nn);
        const S inv = S(1) / std::sqrt(var + eps);
        means[i] = mu;
        inv_sd[i] = inv;
        S* orow = out.data() + i * nn;
        for (std::size_t j = 0; j < nn; ++j) orow[j] = (row[j] - mu) * inv * gamma.data()[j] + beta.data()[j];
    }
    if (out.requires_grad()) {
        out.n->backprop = [m, nn, means, inv_sd](TensorNode<S>& self) {
            auto& px = *self.parents[0];
            auto& pg = *self.parents[1];
            auto& pb = *self.parents[2];
            for (std::size_t i = 0; i < m; ++i) {
                const S* xrow = px.value.data() + i * nn;
                const S* dy = self.grad.data() + i * nn;
                const S inv = inv_sd[i];
                const S mu = means[i];
                if (pg.requires_grad) {
                    pg.ensure_grad();
                    for (std::size_t j = 0; j < nn; ++j) pg.grad[j] += dy[j] * (xrow[j] - mu) * inv;
                }
                if (pb.requires_grad) {
                    pb.ensure_grad();
                    for (std::size_t j = 0; j < nn; ++j) pb.grad[j] += dy[j];
                }
                if (px.requires_grad) {
                    px.ensure_grad();
                    // dxhat = dy * gamma; dx = inv*(dxhat - mean(dxhat) - xhat*mean(dxhat*xhat))
                    S mean_dxhat = S(0), mean_dxhat_xhat = S(0);
                    for (std::size_t j = 0; j < nn; ++j) {
                        const S xhat = (xrow[j] - mu) * inv;
                        const S dxhat = dy[j] * pg.value[j];
                        mean_dxhat += dxhat;
                        mean_dxhat_xhat += dxhat * xhat;
                    }
                    mean_dxhat /= S(nn);
                    mean_dxhat_xhat /= S(nn);
                    S* dx = px.grad.data() + i * nn;
                    for (std::size_t j = 0; j < nn; ++j) {
                        const S xhat = (xrow[j] - mu) * inv;
                        const S dxhat = dy[j] * pg.value[j];
                        dx[j] += inv * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat);
                    }
                }
            }
        };
    }
    return out;
}

template <class S>
TensorT<S> concat_rows(const TensorT<S>& a, const TensorT<S>& b) {
    detail::require_2d(a, "concat_rows");
    detail::require_2d(b, "concat_rows");
    if (a.shape()[1] != b.shape()[1])
        throw DimensionError("concat_rows column mismatch: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    const std::size_t ma = a.shape()[0], mb = b.shape()[0], nn = a.shape()[1];
    auto out = detail::make_result<S>({ma + mb, nn}, {a, b});
    std::copy(a.data(), a.data() + ma * nn, out.data());
    std::copy(b.data(), b.data() + mb * nn, out.data() + ma * nn);
    if (out.requires_grad()) {
        out.n->backprop = [ma, mb, nn](TensorNode<S>& self) {
            auto& pa = *self.parents[0];
            auto& pb = *self.parents[1];
            if (pa.requires_grad) {
                pa.ensure_grad();
                for (std::size_t i = 0; i < ma * nn; ++i) pa.grad[i] += self.grad[i];
            }
            if (pb.requires_grad) {
                pb.ensure_grad();
                for (std::size_t i = 0; i < mb * nn; ++i) pb.grad[i] += self.grad[ma * nn + i];
            }
        };
    }
    return out;
}

template <class S>
TensorT<S> concat_cols(const std::vector<TensorT<S>>& parts) {
    if (parts.empty()) throw ArgumentError("concat_cols of zero tensors");
    const std::size_t m = parts[0].shape()[0];
    std::size_t total = 0;
    for (const auto& p : parts) {
        detail::require_2d(p, "concat_cols");
        if (p.shape()[0] != m) throw DimensionError("concat_cols row mismatch");
        total += p.shape()[1];
    }
    auto out = detail::make_result<S>({m, total}, parts);
    std::size_t off = 0;
    for (const auto& p : parts) {
        const std::size_t c = p.shape()[1];
        for (std::size_t i = 0; i < m; ++i)
            std::copy(p.data() + i * c, p.data() + (i + 1) * c, out.data() + i * total + off);
        off += c;
    }
    if (out.requires_grad()) {
        std::vector<std::size_t> widths;
        for (const auto& p : parts) widths.push_back(p.shape()[1]);
        out.n->backprop = [m, total, widths](TensorNode<S>& self) {
            std::size_t off2 = 0;
            for (std::size_t k = 0; k < widths.size(); ++k) {
                auto& p = *self.parents[k];
                const std::size_t c = widths[k];
                if (p.requires_grad) {
                    p.ensure_grad();
                    for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t j = 0; j < c; ++j) p.grad[i * c + j] += self.grad[i * total + off2 + j];
                }
                off2 += c;
            }
        };
    }
    return out;
}

template <class S>
TensorT<S> slice_rows(const TensorT<S>& a, std::size_t start, std::size_t count) {
    detail::require_2d(a, "slice_rows");
    const std::size_t m = a.shape()[0], nn = a.shape()[1];
    if (start + count > m)
        throw BoundsError("slice_rows [" + std::to_string(start) + ", " + std::to_string(start + count) +
                          ") exceeds " + shape_str(a.shape()));
    auto out = detail::make_result<S>({count, nn}, {a});
    std::copy(a.data() + start * nn, a.data() + (start + count) * nn, out.data());
    if (out.requires_grad()) {
        out.n->backprop = [start, count, nn](TensorNode<S>& self) {
            auto& pa = *self.parents[0];
            pa.ensure_grad();
            for (std::size_t i = 0; i < count * nn; ++i) pa.grad[start * nn + i] += self.grad[i];
        };
    }
    return out;
}

template <class S>
TensorT<S> slice_cols(const TensorT<S>& a, std::size_t start, std::size_t count) {
    detail::require_2d(a, "slice_cols");
    const std::size_t m = a.shape()[0], nn = a.shape()[1];
    if (start + count > nn)
        throw BoundsError("slice_cols [" + std::to_string(start) + ", " + std::to_string(start + count) +
                          ") exceeds " + shape_str(a.shape()));
    auto out = detail::make_result<S>({m, count}, {a});
    for (std::size_t i = 0; i < m; ++i)
        std::copy(a.data() + i * nn + start, a.data() + i * nn + start + count, out.data() + i * count);
    if (out.requires_grad()) {
        out.n->backprop = [m, nn, start, count](TensorNode<S>& self) {
            auto& pa = *self.parents[0];
            pa.ensure_grad();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < count; ++j) pa.grad[i * nn + start + j] += self.grad[i * count + j];
        };
    }
    return out;
}

template <class S>
TensorT<S> reshape(const TensorT<S>& a, std::vector<std::size_t> shape) {
    if (TensorT<S>::count(shape) != a.numel())
        throw DimensionError("reshape " + shape_str(a.shape()) + " -> " + shape_str(shape) + " changes element count");
    auto out = detail::make_result<S>(std::move(shape), {a});
    std::copy(a.data(), a.data() + a.numel(), out.data());
    if (out.requires_grad()) {
        out.n->backprop = [](TensorNode<S>& self) {
            auto& pa = *self.parents[0];
            pa.ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i];
        };
    }
    return out;
}

template <class S>
TensorT<S> sum_all(const TensorT<S>& a) {
    auto out = detail::make_result<S>({1}, {a});
    S acc = S(0);
    for (std::size_t i = 0; i < a.numel(); ++i) acc += a.data()[i];
    out.data()[0] = acc;
    if (out.requires_grad()) {
        out.n->backprop = [](TensorNode<S>& self) {
            auto& pa = *self.parents[0];
            pa.ensure_grad();
            for (std::size_t i = 0; i < pa.grad.size(); ++i) pa.grad[i] += self.grad[0];
        };
    }
    return out;
}

// Embedding lookup: gather rows of table by id. Backward scatters (skipped
// when the table is frozen, the usual case here).
template <class S>
TensorT<S> rows_gather(const TensorT<S>& table, const std::vector<std::size_t>& ids) {
    detail::require_2d(table, "rows_gather");
    const std::size_t v = table.shape()[0], d = table.shape()[1];
    for (std::size_t id : ids)
        if (id >= v) throw BoundsError("rows_gather id " + std::to_string(id) + " >= table rows " + std::to_string(v));
    auto out = detail::make_result<S>({ids.size(), d}, {table});
    for (std::size_t i = 0; i < ids.size(); ++i)
        std::copy(table.data() + ids[i] * d, table.data() + (ids[i] + 1) * d, out.data() + i * d);
    if (out.requires_grad()) {
        out.n->backprop = [ids, d](TensorNode<S>& self) {
            auto& pt = *self.parents[0];
            pt.ensure_grad();
            for (std::size_t i = 0; i < ids.size(); ++i)
                for (std::size_t j = 0; j < d; ++j) pt.grad[ids[i] * d + j] += self.grad[i * d + j];
        };
    }
    return out;
}

// Reverse-mode sweep from a scalar loss. Grads accumulate additively into
// every requires_grad tensor reachable from the loss.
template <class S>
void backward(const TensorT<S>& loss) {
    if (!loss.defined() || loss.numel() != 1)
        throw ContractError("backward expects a scalar loss");
    // iterative post-order topological sort
    std::vector<TensorNode<S>*> topo;
    std::unordered_set<TensorNode<S>*> seen;
    std::vector<std::pair<TensorNode<S>*, std::size_t>> stack;
    stack.emplace_back(loss.n.get(), 0);
    seen.insert(loss.n.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            TensorNode<S>* child = node->parents[idx].get();
            ++idx;
            if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
        } else {
            topo.push_back(node);
            stack.pop_back();
        }
    }
    // reset intermediate accumulators; leaves keep accumulating across sweeps
    for (TensorNode<S>* node : topo) {
        if (node->backprop) {
            node->ensure_grad();
            std::fill(node->grad.begin(), node->grad.end(), S(0));
        }
    }
    loss.n->ensure_grad();
    loss.n->grad[0] += S(1);
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        TensorNode<S>* node = *it;
        if (node->backprop && node->requires_grad) node->backprop(*node);
    }
}

using Tensor = TensorT<float>;

// Named parameter; trainable=false marks frozen weights that the optimizer
// must never touch and for which no grad is ever allocated.
template <class S>
struct ParameterT {
    std::string name;
    TensorT<S> tensor;
    bool trainable = true;
};

using Parameter = ParameterT<float>;

}  // namespace longcast
