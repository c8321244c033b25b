#ifndef VSAL_TENSOR_HPP
#define VSAL_TENSOR_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "vsal/common.hpp"

namespace vsal {

// Thread-local switch: with grad recording off, ops produce detached values
// and no graph is kept alive.
inline bool& grad_enabled_flag() {
    thread_local bool enabled = true;
    return enabled;
}
inline bool grad_enabled() { return grad_enabled_flag(); }

struct NoGradGuard {
    bool prev;
    NoGradGuard() : prev(grad_enabled_flag()) { grad_enabled_flag() = false; }
    ~NoGradGuard() { grad_enabled_flag() = prev; }
};

template <typename T>
struct TensorNode {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;  // same length as data once touched by backward
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorNode<T>>> parents;
    std::function<void(TensorNode<T>&)> backward_fn;

    void ensure_grad() {
        if (grad.empty()) grad.assign(data.size(), T(0));
    }
};

// Value-semantics handle over an immutable graph node. Copies share the node.
template <typename T>
class Tensor {
  public:
    using Node = TensorNode<T>;

    Tensor() = default;

    static Tensor zeros(Shape shape) {
        return from_data(std::move(shape), {});
    }

    static Tensor full(Shape shape, T value) {
        Tensor t = zeros(std::move(shape));
        std::fill(t.n_->data.begin(), t.n_->data.end(), value);
        return t;
    }

    static Tensor scalar(T value) { return full({1}, value); }

    static Tensor from_data(Shape shape, std::vector<T> data) {
        auto node = std::make_shared<Node>();
        std::int64_t n = numel(shape);
        for (int d : shape)
            if (d <= 0) throw DimensionError("tensor extent must be positive, got shape " + shape_str(shape));
        if (data.empty())
            data.assign(static_cast<std::size_t>(n), T(0));
        else if (static_cast<std::int64_t>(data.size()) != n)
            throw DimensionError("data length " + std::to_string(data.size()) +
                                 " does not match shape " + shape_str(shape));
        node->shape = std::move(shape);
        node->data = std::move(data);
        return Tensor(std::move(node));
    }

    bool defined() const { return n_ != nullptr; }
    const Shape& shape() const { return n_->shape; }
    std::int64_t size() const { return static_cast<std::int64_t>(n_->data.size()); }
    const std::vector<T>& data() const { return n_->data; }
    const std::vector<T>& grad() const { return n_->grad; }
    bool has_grad() const { return !n_->grad.empty(); }
    bool requires_grad() const { return n_->requires_grad; }

    // Leaf parameters only: the optimizer updates values in place between
    // graph builds.
    std::vector<T>& mutable_data() { return n_->data; }
    std::vector<T>& mutable_grad() {
        n_->ensure_grad();
        return n_->grad;
    }

    void set_requires_grad(bool rg) { n_->requires_grad = rg; }

    void zero_grad() {
        if (!n_->grad.empty()) std::fill(n_->grad.begin(), n_->grad.end(), T(0));
    }

    T item() const {
        if (size() != 1) throw UsageError("item() requires a scalar tensor, got " + shape_str(shape()));
        return n_->data[0];
    }

    // Reverse-mode sweep from a scalar root. Topological order follows a
    // deterministic DFS over parents, so gradient accumulation order is
    // reproducible.
    void backward() {
        if (size() != 1) throw UsageError("backward() requires a scalar root, got " + shape_str(shape()));
        if (!n_->requires_grad) throw UsageError("backward() on a tensor that does not require grad");
        std::vector<Node*> order;
        std::unordered_set<Node*> seen;
        std::vector<std::pair<Node*, std::size_t>> stack;
        stack.emplace_back(n_.get(), 0);
        seen.insert(n_.get());
        while (!stack.empty()) {
            auto& [node, next] = stack.back();
            if (next < node->parents.size()) {
                Node* p = node->parents[next++].get();
                if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
            } else {
                order.push_back(node);
                stack.pop_back();
            }
        }
        n_->ensure_grad();
        n_->grad[0] += T(1);
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            Node* node = *it;
            if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
        }
    }

    std::shared_ptr<Node> node() const { return n_; }

    explicit Tensor(std::shared_ptr<Node> n) : n_(std::move(n)) {}

  private:
    std::shared_ptr<Node> n_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

namespace detail {

template <typename T>
Tensor<T> make_op(Shape shape, std::vector<T> data, std::vector<Tensor<T>> inputs,
                  std::function<void(TensorNode<T>&)> backward) {
    auto node = std::make_shared<TensorNode<T>>();
    node->shape = std::move(shape);
    node->data = std::move(data);
#ifndef NDEBUG
    for (T v : node->data)
        if (!std::isfinite(static_cast<double>(v))) throw NumericError("non-finite value in op output");
#endif
    bool rg = false;
    if (grad_enabled())
        for (const auto& in : inputs) rg = rg || in.requires_grad();
    if (rg) {
        node->requires_grad = true;
        for (auto& in : inputs) node->parents.push_back(in.node());
        node->backward_fn = std::move(backward);
    }
    return Tensor<T>(std::move(node));
}

template <typename T>
void check_same_shape(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape())
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
}

template <typename T>
void accumulate(TensorNode<T>& dst, const std::vector<T>& g) {
    dst.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) dst.grad[i] += g[i];
}

}  // namespace detail

// ------------------------------------------------------------- elementwise

// Binary ops accept equal shapes or a scalar (size-1) on either side; any
// other mismatch is a dimension error.
template <typename T, typename Fwd, typename Bwd>
Tensor<T> binary_op(const char* name, const Tensor<T>& a, const Tensor<T>& b, Fwd fwd, Bwd bwd) {
    bool a_scalar = a.size() == 1, b_scalar = b.size() == 1;
    if (!a_scalar && !b_scalar) detail::check_same_shape(name, a, b);
    const Shape& shape = b_scalar ? a.shape() : b.shape();
    std::int64_t n = b_scalar ? a.size() : b.size();
    std::vector<T> out(static_cast<std::size_t>(n));
    const auto& av = a.data();
    const auto& bv = b.data();
    for (std::int64_t i = 0; i < n; ++i) {
        T x = av[a_scalar ? 0 : i], y = bv[b_scalar ? 0 : i];
        out[i] = fwd(x, y);
    }
    auto an = a.node();
    auto bn = b.node();
    return detail::make_op<T>(
        shape, std::move(out), {a, b}, [an, bn, a_scalar, b_scalar, bwd](TensorNode<T>& self) {
            std::int64_t n = static_cast<std::int64_t>(self.data.size());
            if (an->requires_grad) an->ensure_grad();
            if (bn->requires_grad) bn->ensure_grad();
            for (std::int64_t i = 0; i < n; ++i) {
                T x = an->data[a_scalar ? 0 : i], y = bn->data[b_scalar ? 0 : i];
                auto [dx, dy] = bwd(x, y, self.data[i]);
                T g = self.grad[i];
                if (an->requires_grad) an->grad[a_scalar ? 0 : i] += dx * g;
                if (bn->requires_grad) bn->grad[b_scalar ? 0 : i] += dy * g;
            }
        });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    return binary_op<T>(
        "add", a, b, [](T x, T y) { return x + y; },
        [](T, T, T) { return std::pair<T, T>(T(1), T(1)); });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    return binary_op<T>(
        "sub", a, b, [](T x, T y) { return x - y; },
        [](T, T, T) { return std::pair<T, T>(T(1), T(-1)); });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    return binary_op<T>(
        "mul", a, b, [](T x, T y) { return x * y; },
        [](T x, T y, T) { return std::pair<T, T>(y, x); });
}

template <typename T>
Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b) {
    return binary_op<T>(
        "div", a, b, [](T x, T y) { return x / y; },
        [](T x, T y, T) { return std::pair<T, T>(T(1) / y, -x / (y * y)); });
}

template <typename T, typename Fwd, typename Bwd>
Tensor<T> unary_op(const Tensor<T>& a, Fwd fwd, Bwd bwd) {
    std::vector<T> out(a.data().size());
    const auto& av = a.data();
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = fwd(av[i]);
    auto an = a.node();
    return detail::make_op<T>(a.shape(), std::move(out), {a}, [an, bwd](TensorNode<T>& self) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (std::size_t i = 0; i < self.data.size(); ++i)
            an->grad[i] += bwd(an->data[i], self.data[i]) * self.grad[i];
    });
}

// y = mul_c * x + add_c
template <typename T>
Tensor<T> affine(const Tensor<T>& a, T mul_c, T add_c) {
    return unary_op(
        a, [=](T x) { return mul_c * x + add_c; }, [=](T, T) { return mul_c; });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
    return unary_op(
        a, [](T x) { return T(1) / (T(1) + std::exp(-x)); },
        [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> tanh_op(const Tensor<T>& a) {
    return unary_op(
        a, [](T x) { return std::tanh(x); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> log_op(const Tensor<T>& a) {
    return unary_op(
        a, [](T x) { return std::log(x); }, [](T x, T) { return T(1) / x; });
}

template <typename T>
Tensor<T> clamp_min(const Tensor<T>& a, T lo) {
    return unary_op(
        a, [=](T x) { return x < lo ? lo : x; }, [=](T x, T) { return x < lo ? T(0) : T(1); });
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& a, T slope) {
    return unary_op(
        a, [=](T x) { return x >= T(0) ? x : slope * x; },
        [=](T x, T) { return x >= T(0) ? T(1) : slope; });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
    // Serial accumulation in index order: reproducible for any thread count.
    T acc = T(0);
    for (T v : a.data()) acc += v;
    auto an = a.node();
    return detail::make_op<T>({1}, {acc}, {a}, [an](TensorNode<T>& self) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        T g = self.grad[0];
        for (auto& gv : an->grad) gv += g;
    });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
    return affine(sum(a), T(1) / static_cast<T>(a.size()), T(0));
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
    if (numel(shape) != a.size())
        throw DimensionError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
    auto an = a.node();
    return detail::make_op<T>(std::move(shape), a.data(), {a}, [an](TensorNode<T>& self) {
        if (!an->requires_grad) return;
        detail::accumulate(*an, self.grad);
    });
}

// Concatenate (n,h,w,c_i) maps along channels.
template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts) {
    if (parts.empty()) throw UsageError("concat_channels: empty input list");
    const Shape& s0 = parts[0].shape();
    if (s0.size() != 4) throw DimensionError("concat_channels: rank-4 tensors required, got " + shape_str(s0));
    int total_c = 0;
    for (const auto& p : parts) {
        const Shape& s = p.shape();
        if (s.size() != 4 || s[0] != s0[0] || s[1] != s0[1] || s[2] != s0[2])
            throw DimensionError("concat_channels: spatial/batch mismatch " + shape_str(s) + " vs " +
                                 shape_str(s0));
        total_c += s[3];
    }
    Shape out_shape = {s0[0], s0[1], s0[2], total_c};
    std::vector<T> out(static_cast<std::size_t>(numel(out_shape)));
    std::int64_t pixels = static_cast<std::int64_t>(s0[0]) * s0[1] * s0[2];
    std::vector<int> offsets;
    int off = 0;
    for (const auto& p : parts) {
        offsets.push_back(off);
        int c = p.shape()[3];
        const auto& src = p.data();
        for (std::int64_t px = 0; px < pixels; ++px)
            std::copy_n(src.begin() + px * c, c, out.begin() + px * total_c + off);
        off += c;
    }
    std::vector<std::shared_ptr<TensorNode<T>>> nodes;
    for (const auto& p : parts) nodes.push_back(p.node());
    return detail::make_op<T>(out_shape, std::move(out), parts,
                              [nodes, offsets, pixels, total_c](TensorNode<T>& self) {
                                  for (std::size_t k = 0; k < nodes.size(); ++k) {
                                      auto& pn = *nodes[k];
                                      if (!pn.requires_grad) continue;
                                      pn.ensure_grad();
                                      int c = pn.shape[3];
                                      int off = offsets[k];
                                      for (std::int64_t px = 0; px < pixels; ++px)
                                          for (int j = 0; j < c; ++j)
                                              pn.grad[px * c + j] += self.grad[px * total_c + off + j];
                                  }
                              });
}

// x:(n,h,w,c) scaled per pixel by map:(n,h,w,1).
template <typename T>
Tensor<T> mul_channelwise(const Tensor<T>& x, const Tensor<T>& map) {
    const Shape& xs = x.shape();
    const Shape& ms = map.shape();
    if (xs.size() != 4 || ms.size() != 4 || ms[3] != 1 || ms[0] != xs[0] || ms[1] != xs[1] || ms[2] != xs[2])
        throw DimensionError("mul_channelwise: map " + shape_str(ms) + " does not broadcast over " +
                             shape_str(xs));
    int c = xs[3];
    std::int64_t pixels = static_cast<std::int64_t>(xs[0]) * xs[1] * xs[2];
    std::vector<T> out(x.data().size());
    const auto& xv = x.data();
    const auto& mv = map.data();
    for (std::int64_t px = 0; px < pixels; ++px) {
        T m = mv[px];
        for (int j = 0; j < c; ++j) out[px * c + j] = xv[px * c + j] * m;
    }
    auto xn = x.node();
    auto mn = map.node();
    return detail::make_op<T>(xs, std::move(out), {x, map}, [xn, mn, pixels, c](TensorNode<T>& self) {
        if (xn->requires_grad) xn->ensure_grad();
        if (mn->requires_grad) mn->ensure_grad();
        for (std::int64_t px = 0; px < pixels; ++px) {
            T m = mn->data[px];
            T macc = T(0);
            for (int j = 0; j < c; ++j) {
                T g = self.grad[px * c + j];
                if (xn->requires_grad) xn->grad[px * c + j] += g * m;
                macc += g * xn->data[px * c + j];
            }
            if (mn->requires_grad) mn->grad[px] += macc;
        }
    });
}

// Each batch slice divided by its own element sum; turns nonnegative maps
// into per-frame distributions.
template <typename T>
Tensor<T> normalize_per_sample(const Tensor<T>& x, T eps = T(0)) {
    const Shape& s = x.shape();
    if (s.empty()) throw DimensionError("normalize_per_sample: undefined shape");
    int n = s[0];
    std::int64_t per = x.size() / n;
    std::vector<T> out(x.data().size());
    std::vector<T> sums(static_cast<std::size_t>(n));
    const auto& xv = x.data();
    for (int b = 0; b < n; ++b) {
        T acc = T(0);
        for (std::int64_t i = 0; i < per; ++i) acc += xv[b * per + i];
        acc += eps;
        sums[b] = acc;
        for (std::int64_t i = 0; i < per; ++i) out[b * per + i] = xv[b * per + i] / acc;
    }
    auto xn = x.node();
    return detail::make_op<T>(s, std::move(out), {x}, [xn, n, per, sums](TensorNode<T>& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (int b = 0; b < n; ++b) {
            T dot = T(0);
            for (std::int64_t i = 0; i < per; ++i) dot += self.grad[b * per + i] * self.data[b * per + i];
            T inv = T(1) / sums[b];
            for (std::int64_t i = 0; i < per; ++i)
                xn->grad[b * per + i] += (self.grad[b * per + i] - dot) * inv;
        }
    });
}

// Detached copy sharing no graph history.
template <typename T>
Tensor<T> detach(const Tensor<T>& x) {
    return Tensor<T>::from_data(x.shape(), x.data());
}

// Value-preserving precision cast (detached).
template <typename To, typename From>
Tensor<To> cast(const Tensor<From>& x) {
    std::vector<To> out(x.data().size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<To>(x.data()[i]);
    return Tensor<To>::from_data(x.shape(), std::move(out));
}

}  // namespace vsal

#endif
