#include "basecast/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>
#include <unordered_set>

namespace basecast {

namespace {

} // namespace

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) os << ", ";
        os << s[i];
    }
    os << ")";
    return os.str();
}

int64_t shape_size(const Shape& s) {
    int64_t n = 1;
    for (int d : s) n *= d;
    return n;
}

namespace detail {

struct Node {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;
    bool requires_grad = false;
    bool is_leaf = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backprop;
};

} // namespace detail

using detail::Node;

namespace {

std::shared_ptr<Node> make_constant(Shape shape, std::vector<double> values) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->values = std::move(values);
    return n;
}

void ensure_grad(Node& n) {
    if (n.grad.empty()) n.grad.assign(n.values.size(), 0.0);
}

void check_positive_shape(const Shape& s) {
    for (int d : s)
        if (d <= 0) throw ShapeError("tensor extents must be positive, got " + shape_str(s));
}

// Result node wiring for an op over the given inputs. The compute callback
// fills values; backprop is attached only when some input needs gradients.
std::shared_ptr<Node> make_op(Shape shape,
                              std::initializer_list<std::shared_ptr<Node>> inputs,
                              std::function<void(Node&)> backprop) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->values.resize(static_cast<size_t>(shape_size(n->shape)));
    bool needs = false;
    for (const auto& in : inputs) needs = needs || in->requires_grad;
    if (needs) {
        n->requires_grad = true;
        n->parents.assign(inputs);
        n->backprop = std::move(backprop);
    }
    return n;
}

// ---- matmul kernels ----
// All variants accumulate over the inner dimension in ascending index order
// for every output element, so they round identically to a naive triple loop.

void mm_nn(const double* a, const double* b, double* c, int m, int k, int n,
           bool accumulate) {
    // Blocked over the inner dimension for cache reuse of b; each output
    // element still accumulates in ascending p order, so the result is
    // bit-identical to the naive loop regardless of blocking or the row
    // split across threads.
    auto rows = [=](int i0, int i1) {
        if (!accumulate)
            std::fill(c + static_cast<size_t>(i0) * n, c + static_cast<size_t>(i1) * n,
                      0.0);
        constexpr int kBlock = 32;
        for (int p0 = 0; p0 < k; p0 += kBlock) {
            const int p1 = std::min(p0 + kBlock, k);
            for (int i = i0; i < i1; ++i) {
                double* crow = c + static_cast<size_t>(i) * n;
                const double* arow = a + static_cast<size_t>(i) * k;
                for (int p = p0; p < p1; ++p) {
                    const double av = arow[p];
                    const double* brow = b + static_cast<size_t>(p) * n;
                    for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
                }
            }
        }
    };
    rows(0, m);
}

// c (m x n) = a (m x k) * b^T where b is (n x k). Used on gradient paths
// only, so the reduction may vectorize (reassociate); still deterministic
// run to run.
void mm_nt(const double* a, const double* b, double* c, int m, int k, int n,
           bool accumulate) {
    auto rows = [=](int i0, int i1) {
        for (int i = i0; i < i1; ++i) {
            const double* arow = a + static_cast<size_t>(i) * k;
            double* crow = c + static_cast<size_t>(i) * n;
            for (int j = 0; j < n; ++j) {
                const double* brow = b + static_cast<size_t>(j) * k;
                double acc = 0.0;
#pragma omp simd reduction(+ : acc)
                for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
                if (accumulate)
                    crow[j] += acc;
                else
                    crow[j] = acc;
            }
        }
    };
    rows(0, m);
}

// c (m x n) = a^T * b where a is (l x m), b is (l x n). Gradient path.
void mm_tn(const double* a, const double* b, double* c, int l, int m, int n,
           bool accumulate) {
    auto rows = [=](int i0, int i1) {
        if (!accumulate)
            std::fill(c + static_cast<size_t>(i0) * n, c + static_cast<size_t>(i1) * n,
                      0.0);
        constexpr int kBlock = 32;
        for (int p0 = 0; p0 < l; p0 += kBlock) {
            const int p1 = std::min(p0 + kBlock, l);
            for (int i = i0; i < i1; ++i) {
                double* crow = c + static_cast<size_t>(i) * n;
                for (int p = p0; p < p1; ++p) {
                    const double av = a[static_cast<size_t>(p) * m + i];
                    const double* brow = b + static_cast<size_t>(p) * n;
                    for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
                }
            }
        }
    };
    rows(0, m);
}

struct AxisSplit {
    int64_t outer, mid, inner;
};

AxisSplit split_at(const Shape& s, int axis) {
    AxisSplit r{1, s[axis], 1};
    for (int i = 0; i < axis; ++i) r.outer *= s[i];
    for (size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
    return r;
}

void check_axis(const Shape& s, int axis) {
    if (axis < 0 || axis >= static_cast<int>(s.size()))
        throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                         shape_str(s));
}

const double kSqrt2Inv = 0.70710678118654752440;
const double kInvSqrt2Pi = 0.39894228040143267794;

} // namespace

// ---- Tensor basics ----

Tensor Tensor::zeros(Shape shape) {
    check_positive_shape(shape);
    auto n = static_cast<size_t>(shape_size(shape));
    return Tensor(make_constant(std::move(shape), std::vector<double>(n, 0.0)));
}

Tensor Tensor::ones(Shape shape) { return full(std::move(shape), 1.0); }

Tensor Tensor::full(Shape shape, double value) {
    check_positive_shape(shape);
    auto n = static_cast<size_t>(shape_size(shape));
    return Tensor(make_constant(std::move(shape), std::vector<double>(n, value)));
}

Tensor Tensor::scalar(double value) { return full({1}, value); }

Tensor Tensor::from_data(Shape shape, std::vector<double> data) {
    check_positive_shape(shape);
    if (shape_size(shape) != static_cast<int64_t>(data.size()))
        throw ShapeError("data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str(shape));
    return Tensor(make_constant(std::move(shape), std::move(data)));
}

Tensor Tensor::leaf(Shape shape, std::vector<double> data) {
    Tensor t = from_data(std::move(shape), std::move(data));
    t.node_->requires_grad = true;
    t.node_->is_leaf = true;
    t.node_->grad.assign(t.node_->values.size(), 0.0);
    return t;
}

Tensor Tensor::uniform_leaf(Shape shape, int fan_in, Rng& rng) {
    auto n = static_cast<size_t>(shape_size(shape));
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::vector<double> data(n);
    for (auto& v : data) v = rng.uniform(-bound, bound);
    return leaf(std::move(shape), std::move(data));
}

const Shape& Tensor::shape() const { return node_->shape; }
int Tensor::ndim() const { return static_cast<int>(node_->shape.size()); }
int Tensor::dim(int axis) const { return node_->shape[axis]; }
int64_t Tensor::size() const { return static_cast<int64_t>(node_->values.size()); }
bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

bool Tensor::all_finite() const {
    for (double v : node_->values)
        if (!std::isfinite(v)) return false;
    return true;
}

const std::vector<double>& Tensor::values() const { return node_->values; }

const std::vector<double>& Tensor::grad() const {
    ensure_grad(*node_);
    return node_->grad;
}

double Tensor::value() const {
    if (node_->values.size() != 1)
        throw ShapeError("value() requires a scalar, got shape " + shape_str(node_->shape));
    return node_->values[0];
}

double Tensor::at(int i, int j) const {
    if (ndim() != 2) throw ShapeError("at(i,j) requires a 2-D tensor");
    return node_->values[static_cast<size_t>(i) * node_->shape[1] + j];
}

std::vector<double>& Tensor::mutable_values() { return node_->values; }

std::vector<double>& Tensor::mutable_grad() {
    ensure_grad(*node_);
    return node_->grad;
}

void Tensor::zero_grad() {
    ensure_grad(*node_);
    std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach() const {
    return Tensor(make_constant(node_->shape, node_->values));
}

void Tensor::backward() const {
    if (!node_) throw Error("backward() on an empty tensor");
    if (node_->values.size() != 1)
        throw Error("backward() requires a scalar loss, got shape " + shape_str(node_->shape));
    if (!node_->requires_grad) return;

    // Reverse post-order DFS = topological order with consumers first.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    struct Frame {
        Node* n;
        size_t next;
    };
    std::vector<Frame> stack;
    stack.push_back({node_.get(), 0});
    seen.insert(node_.get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next < f.n->parents.size()) {
            Node* p = f.n->parents[f.next++].get();
            if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
        } else {
            order.push_back(f.n);
            stack.pop_back();
        }
    }

    // Fresh pass: intermediates start from zero, only leaves accumulate
    // across repeated backward() calls.
    for (Node* n : order)
        if (!n->is_leaf) n->grad.assign(n->values.size(), 0.0);

    ensure_grad(*node_);
    node_->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backprop) n->backprop(*n);
    }
}

// ---- elementwise ----

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    auto an = a.node().get();
    auto bn = b.node().get();
    auto out = make_op(a.shape(), {a.node(), b.node()}, [an, bn](Node& n) {
        if (an->requires_grad) {
            ensure_grad(*an);
            for (size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += n.grad[i];
        }
        if (bn->requires_grad) {
            ensure_grad(*bn);
            for (size_t i = 0; i < n.grad.size(); ++i) bn->grad[i] += n.grad[i];
        }
    });
    for (size_t i = 0; i < out->values.size(); ++i)
        out->values[i] = an->values[i] + bn->values[i];
    return Tensor(out);
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    auto an = a.node().get();
    auto bn = b.node().get();
    auto out = make_op(a.shape(), {a.node(), b.node()}, [an, bn](Node& n) {
        if (an->requires_grad) {
            ensure_grad(*an);
            for (size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += n.grad[i];
        }
        if (bn->requires_grad) {
            ensure_grad(*bn);
            for (size_t i = 0; i < n.grad.size(); ++i) bn->grad[i] -= n.grad[i];
        }
    });
    for (size_t i = 0; i < out->values.size(); ++i)
        out->values[i] = an->values[i] - bn->values[i];
    return Tensor(out);
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    auto an = a.node().get();
    auto bn = b.node().get();
    auto out = make_op(a.shape(), {a.node(), b.node()}, [an, bn](Node& n) {
        if (an->requires_grad) {
            ensure_grad(*an);
            for (size_t i = 0; i < n.grad.size(); ++i)
                an->grad[i] += n.grad[i] * bn->values[i];
        }
        if (bn->requires_grad) {
            ensure_grad(*bn);
            for (size_t i = 0; i < n.grad.size(); ++i)
                bn->grad[i] += n.grad[i] * an->values[i];
        }
    });
    for (size_t i = 0; i < out->values.size(); ++i)
        out->values[i] = an->values[i] * bn->values[i];
    return Tensor(out);
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor scale(const Tensor& a, double s) {
    auto an = a.node().get();
    auto out = make_op(a.shape(), {a.node()}, [an, s](Node& n) {
        ensure_grad(*an);
        for (size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += s * n.grad[i];
    });
    for (size_t i = 0; i < out->values.size(); ++i) out->values[i] = s * an->values[i];
    return Tensor(out);
}

Tensor add_scalar(const Tensor& a, double s) {
    auto an = a.node().get();
    auto out = make_op(a.shape(), {a.node()}, [an](Node& n) {
        ensure_grad(*an);
        for (size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += n.grad[i];
    });
    for (size_t i = 0; i < out->values.size(); ++i) out->values[i] = an->values[i] + s;
    return Tensor(out);
}

Tensor add_rowvec(const Tensor& x, const Tensor& v) {
    if (v.ndim() != 1 || x.ndim() < 1 || x.shape().back() != v.dim(0))
        throw ShapeError("add_rowvec: trailing dim of " + shape_str(x.shape()) +
                         " must match vector " + shape_str(v.shape()));
    auto xn = x.node().get();
    auto vn = v.node().get();
    const int64_t n = v.size();
    const int64_t rows = x.size() / n;
    auto out = make_op(x.shape(), {x.node(), v.node()}, [xn, vn, rows, n](Node& nd) {
        if (xn->requires_grad) {
            ensure_grad(*xn);
            for (size_t i = 0; i < nd.grad.size(); ++i) xn->grad[i] += nd.grad[i];
        }
        if (vn->requires_grad) {
            ensure_grad(*vn);
            for (int64_t r = 0; r < rows; ++r) {
                const double* g = nd.grad.data() + r * n;
                for (int64_t j = 0; j < n; ++j) vn->grad[j] += g[j];
            }
        }
    });
    for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < n; ++j)
            out->values[r * n + j] = xn->values[r * n + j] + vn->values[j];
    return Tensor(out);
}

Tensor relu(const Tensor& a) {
    auto an = a.node().get();
    auto out = make_op(a.shape(), {a.node()}, [an](Node& n) {
        ensure_grad(*an);
        for (size_t i = 0; i < n.grad.size(); ++i)
            if (an->values[i] > 0.0) an->grad[i] += n.grad[i];
    });
    for (size_t i = 0; i < out->values.size(); ++i)
        out->values[i] = an->values[i] > 0.0 ? an->values[i] : 0.0;
    return Tensor(out);
}

Tensor gelu(const Tensor& a) {
    auto an = a.node().get();
    auto out = make_op(a.shape(), {a.node()}, [an](Node& n) {
        ensure_grad(*an);
        for (size_t i = 0; i < n.grad.size(); ++i) {
            const double x = an->values[i];
            const double cdf = 0.5 * (1.0 + std::erf(x * kSqrt2Inv));
            const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
            an->grad[i] += n.grad[i] * (cdf + x * pdf);
        }
    });
    for (size_t i = 0; i < out->values.size(); ++i) {
        const double x = an->values[i];
        out->values[i] = 0.5 * x * (1.0 + std::erf(x * kSqrt2Inv));
    }
    return Tensor(out);
}

Tensor exp_op(const Tensor& a) {
    auto an = a.node().get();
    auto out_node = make_op(a.shape(), {a.node()}, nullptr);
    for (size_t i = 0; i < out_node->values.size(); ++i)
        out_node->values[i] = std::exp(an->values[i]);
    if (out_node->requires_grad) {
        Node* on = out_node.get();
        out_node->backprop = [an, on](Node& n) {
            ensure_grad(*an);
            for (size_t i = 0; i < n.grad.size(); ++i)
                an->grad[i] += n.grad[i] * on->values[i];
        };
    }
    return Tensor(out_node);
}

Tensor log_op(const Tensor& a) {
    auto an = a.node().get();
    auto out = make_op(a.shape(), {a.node()}, [an](Node& n) {
        ensure_grad(*an);
        for (size_t i = 0; i < n.grad.size(); ++i)
            an->grad[i] += n.grad[i] / an->values[i];
    });
    for (size_t i = 0; i < out->values.size(); ++i)
        out->values[i] = std::log(an->values[i]);
    return Tensor(out);
}

Tensor sum(const Tensor& a) {
    auto an = a.node().get();
    auto out = make_op({1}, {a.node()}, [an](Node& n) {
        ensure_grad(*an);
        const double g = n.grad[0];
        for (size_t i = 0; i < an->grad.size(); ++i) an->grad[i] += g;
    });
    double acc = 0.0;
    for (double v : an->values) acc += v;
    out->values[0] = acc;
    return Tensor(out);
}

Tensor mean(const Tensor& a) {
    auto an = a.node().get();
    const double inv = 1.0 / static_cast<double>(a.size());
    auto out = make_op({1}, {a.node()}, [an, inv](Node& n) {
        ensure_grad(*an);
        const double g = n.grad[0] * inv;
        for (size_t i = 0; i < an->grad.size(); ++i) an->grad[i] += g;
    });
    double acc = 0.0;
    for (double v : an->values) acc += v;
    out->values[0] = acc * inv;
    return Tensor(out);
}

// ---- linear algebra ----

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.ndim() != 2 || b.ndim() != 2)
        throw ShapeError("matmul requires 2-D tensors, got " + shape_str(a.shape()) +
                         " and " + shape_str(b.shape()));
    if (a.dim(1) != b.dim(0))
        throw ShapeError("matmul: inner extents differ, " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
    const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
    auto an = a.node().get();
    auto bn = b.node().get();
    auto out = make_op({m, n}, {a.node(), b.node()}, [an, bn, m, k, n](Node& nd) {
        if (an->requires_grad) {
            ensure_grad(*an);
            // dA = dC * B^T
            mm_nt(nd.grad.data(), bn->values.data(), an->grad.data(), m, n, k, true);
        }
        if (bn->requires_grad) {
            ensure_grad(*bn);
            // dB = A^T * dC
            mm_tn(an->values.data(), nd.grad.data(), bn->grad.data(), m, k, n, true);
        }
    });
    mm_nn(an->values.data(), bn->values.data(), out->values.data(), m, k, n, false);
    return Tensor(out);
}

Tensor transpose(const Tensor& a) {
    if (a.ndim() != 2) throw ShapeError("transpose requires a 2-D tensor");
    const int m = a.dim(0), n = a.dim(1);
    auto an = a.node().get();
    auto out = make_op({n, m}, {a.node()}, [an, m, n](Node& nd) {
        ensure_grad(*an);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j)
                an->grad[static_cast<size_t>(j) * n + i] +=
                    nd.grad[static_cast<size_t>(i) * m + j];
    });
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            out->values[static_cast<size_t>(j) * m + i] =
                an->values[static_cast<size_t>(i) * n + j];
    return Tensor(out);
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (x.ndim() != 2 || w.ndim() != 2 || b.ndim() != 1)
        throw ShapeError("affine expects x (r,in), w (in,out), b (out)");
    if (x.dim(1) != w.dim(0) || w.dim(1) != b.dim(0))
        throw ShapeError("affine: incompatible shapes x" + shape_str(x.shape()) + " w" +
                         shape_str(w.shape()) + " b" + shape_str(b.shape()));
    const int m = x.dim(0), k = x.dim(1), n = w.dim(1);
    auto xn = x.node().get();
    auto wn = w.node().get();
    auto bn = b.node().get();
    auto out = make_op({m, n}, {x.node(), w.node(), b.node()},
                       [xn, wn, bn, m, k, n](Node& nd) {
        if (xn->requires_grad) {
            ensure_grad(*xn);
            mm_nt(nd.grad.data(), wn->values.data(), xn->grad.data(), m, n, k, true);
        }
        if (wn->requires_grad) {
            ensure_grad(*wn);
            mm_tn(xn->values.data(), nd.grad.data(), wn->grad.data(), m, k, n, true);
        }
        if (bn->requires_grad) {
            ensure_grad(*bn);
            for (int i = 0; i < m; ++i) {
                const double* g = nd.grad.data() + static_cast<size_t>(i) * n;
                for (int j = 0; j < n; ++j) bn->grad[j] += g[j];
            }
        }
    });
    mm_nn(xn->values.data(), wn->values.data(), out->values.data(), m, k, n, false);
    for (int i = 0; i < m; ++i) {
        double* row = out->values.data() + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) row[j] += bn->values[j];
    }
    return Tensor(out);
}

// ---- shape ops ----

Tensor reshape(const Tensor& a, Shape shape) {
    check_positive_shape(shape);
    if (shape_size(shape) != a.size())
        throw ShapeError("reshape: size mismatch " + shape_str(a.shape()) + " -> " +
                         shape_str(shape));
    auto an = a.node().get();
    auto out = make_op(std::move(shape), {a.node()}, [an](Node& nd) {
        ensure_grad(*an);
        for (size_t i = 0; i < nd.grad.size(); ++i) an->grad[i] += nd.grad[i];
    });
    out->values = an->values;
    return Tensor(out);
}

Tensor slice(const Tensor& a, int axis, int start, int len) {
    check_axis(a.shape(), axis);
    if (start < 0 || len <= 0 || start + len > a.dim(axis))
        throw ShapeError("slice [" + std::to_string(start) + ", " +
                         std::to_string(start + len) + ") out of range for axis " +
                         std::to_string(axis) + " of " + shape_str(a.shape()));
    Shape out_shape = a.shape();
    out_shape[axis] = len;
    const auto sp = split_at(a.shape(), axis);
    auto an = a.node().get();
    auto out = make_op(out_shape, {a.node()}, [an, sp, start, len](Node& nd) {
        ensure_grad(*an);
        for (int64_t o = 0; o < sp.outer; ++o)
            for (int64_t m = 0; m < len; ++m) {
                const double* src = nd.grad.data() + (o * len + m) * sp.inner;
                double* dst = an->grad.data() + (o * sp.mid + start + m) * sp.inner;
                for (int64_t i = 0; i < sp.inner; ++i) dst[i] += src[i];
            }
    });
    for (int64_t o = 0; o < sp.outer; ++o)
        for (int64_t m = 0; m < len; ++m) {
            const double* src = an->values.data() + (o * sp.mid + start + m) * sp.inner;
            double* dst = out->values.data() + (o * len + m) * sp.inner;
            std::memcpy(dst, src, static_cast<size_t>(sp.inner) * sizeof(double));
        }
    return Tensor(out);
}

Tensor concat(std::span<const Tensor> parts, int axis) {
    if (parts.empty()) throw ShapeError("concat of zero tensors");
    const Shape& first = parts[0].shape();
    check_axis(first, axis);
    int total = 0;
    for (const auto& p : parts) {
        if (p.ndim() != static_cast<int>(first.size()))
            throw ShapeError("concat: rank mismatch");
        for (int d = 0; d < p.ndim(); ++d)
            if (d != axis && p.dim(d) != first[d])
                throw ShapeError("concat: shape mismatch " + shape_str(p.shape()) +
                                 " vs " + shape_str(first));
        total += p.dim(axis);
    }
    Shape out_shape = first;
    out_shape[axis] = total;
    const auto osp = split_at(out_shape, axis);

    auto out = std::make_shared<Node>();
    out->shape = out_shape;
    out->values.resize(static_cast<size_t>(shape_size(out_shape)));
    bool needs = false;
    for (const auto& p : parts) needs = needs || p.requires_grad();

    struct Piece {
        Node* node;
        int64_t mid;
        int64_t offset; // start along the concat axis
    };
    std::vector<Piece> pieces;
    int64_t off = 0;
    for (const auto& p : parts) {
        pieces.push_back({p.node().get(), p.dim(axis), off});
        off += p.dim(axis);
    }

    for (const auto& pc : pieces)
        for (int64_t o = 0; o < osp.outer; ++o)
            for (int64_t m = 0; m < pc.mid; ++m) {
                const double* src = pc.node->values.data() + (o * pc.mid + m) * osp.inner;
                double* dst =
                    out->values.data() + (o * osp.mid + pc.offset + m) * osp.inner;
                std::memcpy(dst, src, static_cast<size_t>(osp.inner) * sizeof(double));
            }

    if (needs) {
        out->requires_grad = true;
        for (const auto& p : parts) out->parents.push_back(p.node());
        out->backprop = [pieces, osp](Node& nd) {
            for (const auto& pc : pieces) {
                if (!pc.node->requires_grad) continue;
                ensure_grad(*pc.node);
                for (int64_t o = 0; o < osp.outer; ++o)
                    for (int64_t m = 0; m < pc.mid; ++m) {
                        const double* src =
                            nd.grad.data() + (o * osp.mid + pc.offset + m) * osp.inner;
                        double* dst = pc.node->grad.data() + (o * pc.mid + m) * osp.inner;
                        for (int64_t i = 0; i < osp.inner; ++i) dst[i] += src[i];
                    }
            }
        };
    }
    return Tensor(out);
}

// ---- normalization / attention ----

Tensor softmax(const Tensor& a, int axis) {
    check_axis(a.shape(), axis);
    const auto sp = split_at(a.shape(), axis);
    auto an = a.node().get();
    auto out_node = make_op(a.shape(), {a.node()}, nullptr);
    // forward with max-subtraction
    for (int64_t o = 0; o < sp.outer; ++o)
        for (int64_t i = 0; i < sp.inner; ++i) {
            const int64_t base = o * sp.mid * sp.inner + i;
            double mx = an->values[base];
            for (int64_t j = 1; j < sp.mid; ++j)
                mx = std::max(mx, an->values[base + j * sp.inner]);
            double denom = 0.0;
            for (int64_t j = 0; j < sp.mid; ++j) {
                const double e = std::exp(an->values[base + j * sp.inner] - mx);
                out_node->values[base + j * sp.inner] = e;
                denom += e;
            }
            const double inv = 1.0 / denom;
            for (int64_t j = 0; j < sp.mid; ++j) out_node->values[base + j * sp.inner] *= inv;
        }
    if (out_node->requires_grad) {
        Node* on = out_node.get();
        out_node->backprop = [an, on, sp](Node& nd) {
            ensure_grad(*an);
            for (int64_t o = 0; o < sp.outer; ++o)
                for (int64_t i = 0; i < sp.inner; ++i) {
                    const int64_t base = o * sp.mid * sp.inner + i;
                    double dot = 0.0;
                    for (int64_t j = 0; j < sp.mid; ++j) {
                        const int64_t idx = base + j * sp.inner;
                        dot += on->values[idx] * nd.grad[idx];
                    }
                    for (int64_t j = 0; j < sp.mid; ++j) {
                        const int64_t idx = base + j * sp.inner;
                        an->grad[idx] += on->values[idx] * (nd.grad[idx] - dot);
                    }
                }
        };
    }
    return Tensor(out_node);
}

Tensor log_softmax(const Tensor& a, int axis) {
    check_axis(a.shape(), axis);
    const auto sp = split_at(a.shape(), axis);
    auto an = a.node().get();
    auto out_node = make_op(a.shape(), {a.node()}, nullptr);
    for (int64_t o = 0; o < sp.outer; ++o)
        for (int64_t i = 0; i < sp.inner; ++i) {
            const int64_t base = o * sp.mid * sp.inner + i;
            double mx = an->values[base];
            for (int64_t j = 1; j < sp.mid; ++j)
                mx = std::max(mx, an->values[base + j * sp.inner]);
            double denom = 0.0;
            for (int64_t j = 0; j < sp.mid; ++j)
                denom += std::exp(an->values[base + j * sp.inner] - mx);
            const double lse = mx + std::log(denom);
            for (int64_t j = 0; j < sp.mid; ++j) {
                const int64_t idx = base + j * sp.inner;
                out_node->values[idx] = an->values[idx] - lse;
            }
        }
    if (out_node->requires_grad) {
        Node* on = out_node.get();
        out_node->backprop = [an, on, sp](Node& nd) {
            ensure_grad(*an);
            for (int64_t o = 0; o < sp.outer; ++o)
                for (int64_t i = 0; i < sp.inner; ++i) {
                    const int64_t base = o * sp.mid * sp.inner + i;
                    double gsum = 0.0;
                    for (int64_t j = 0; j < sp.mid; ++j)
                        gsum += nd.grad[base + j * sp.inner];
                    for (int64_t j = 0; j < sp.mid; ++j) {
                        const int64_t idx = base + j * sp.inner;
                        an->grad[idx] += nd.grad[idx] - std::exp(on->values[idx]) * gsum;
                    }
                }
        };
    }
    return Tensor(out_node);
}

Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    if (x.ndim() < 1) throw ShapeError("layernorm needs at least 1-D input");
    const int n = x.shape().back();
    if (gamma.ndim() != 1 || gamma.dim(0) != n || beta.ndim() != 1 || beta.dim(0) != n)
        throw ShapeError("layernorm: gamma/beta must be length " + std::to_string(n) +
                         ", got " + shape_str(gamma.shape()) + " and " +
                         shape_str(beta.shape()));
    const int64_t rows = x.size() / n;
    auto xn = x.node().get();
    auto gn = gamma.node().get();
    auto bn = beta.node().get();

    auto xhat = std::make_shared<std::vector<double>>(x.size());
    auto inv_std = std::make_shared<std::vector<double>>(rows);

    auto out = make_op(x.shape(), {x.node(), gamma.node(), beta.node()},
                       [xn, gn, bn, xhat, inv_std, rows, n](Node& nd) {
        const double invn = 1.0 / n;
        for (int64_t r = 0; r < rows; ++r) {
            const double* g = nd.grad.data() + r * n;
            const double* xh = xhat->data() + r * n;
            const double istd = (*inv_std)[r];
            if (gn->requires_grad) {
                ensure_grad(*gn);
                for (int j = 0; j < n; ++j) gn->grad[j] += g[j] * xh[j];
            }
            if (bn->requires_grad) {
                ensure_grad(*bn);
                for (int j = 0; j < n; ++j) bn->grad[j] += g[j];
            }
            if (xn->requires_grad) {
                ensure_grad(*xn);
                double m1 = 0.0, m2 = 0.0; // means of dxhat and dxhat*xhat
                for (int j = 0; j < n; ++j) {
                    const double dxh = g[j] * gn->values[j];
                    m1 += dxh;
                    m2 += dxh * xh[j];
                }
                m1 *= invn;
                m2 *= invn;
                double* dx = xn->grad.data() + r * n;
                for (int j = 0; j < n; ++j) {
                    const double dxh = g[j] * gn->values[j];
                    dx[j] += istd * (dxh - m1 - xh[j] * m2);
                }
            }
        }
    });

    for (int64_t r = 0; r < rows; ++r) {
        const double* row = xn->values.data() + r * n;
        double mu = 0.0;
        for (int j = 0; j < n; ++j) mu += row[j];
        mu /= n;
        double var = 0.0;
        for (int j = 0; j < n; ++j) {
            const double d = row[j] - mu;
            var += d * d;
        }
        var /= n;
        const double istd = 1.0 / std::sqrt(var + eps);
        (*inv_std)[r] = istd;
        double* xh = xhat->data() + r * n;
        double* y = out->values.data() + r * n;
        for (int j = 0; j < n; ++j) {
            xh[j] = (row[j] - mu) * istd;
            y[j] = gn->values[j] * xh[j] + bn->values[j];
        }
    }
    return Tensor(out);
}

Tensor multihead_attention(const Tensor& q, const Tensor& k, const Tensor& v, int heads,
                           AttentionProbe* probe) {
    if (q.ndim() != 2 || k.ndim() != 2 || v.ndim() != 2)
        throw ShapeError("multihead_attention expects 2-D q, k, v");
    const int A = q.dim(0), W = q.dim(1);
    const int B = k.dim(0);
    if (k.dim(1) != W || v.dim(1) != W || v.dim(0) != B)
        throw ShapeError("multihead_attention: q" + shape_str(q.shape()) + " k" +
                         shape_str(k.shape()) + " v" + shape_str(v.shape()) +
                         " are inconsistent");
    if (heads <= 0 || W % heads != 0)
        throw ShapeError("multihead_attention: width " + std::to_string(W) +
                         " not divisible by " + std::to_string(heads) + " heads");
    const int D = W / heads;
    const double sc = 1.0 / std::sqrt(static_cast<double>(D));

    auto qn = q.node().get();
    auto kn = k.node().get();
    auto vn = v.node().get();

    // probs: heads x A x B, saved for backward
    auto probs = std::make_shared<std::vector<double>>(
        static_cast<size_t>(heads) * A * B);

    auto out = make_op({A, W}, {q.node(), k.node(), v.node()},
                       [qn, kn, vn, probs, heads, A, B, D, W, sc](Node& nd) {
        std::vector<double> dP(static_cast<size_t>(A) * B);
        std::vector<double> dS(static_cast<size_t>(A) * B);
        for (int h = 0; h < heads; ++h) {
            const int off = h * D;
            const double* P = probs->data() + static_cast<size_t>(h) * A * B;
            // dP = dO_h V_h^T ; dV_h += P^T dO_h
            for (int i = 0; i < A; ++i) {
                const double* go = nd.grad.data() + static_cast<size_t>(i) * W + off;
                for (int j = 0; j < B; ++j) {
                    const double* vr = vn->values.data() + static_cast<size_t>(j) * W + off;
                    double acc = 0.0;
#pragma omp simd reduction(+ : acc)
                    for (int d = 0; d < D; ++d) acc += go[d] * vr[d];
                    dP[static_cast<size_t>(i) * B + j] = acc;
                }
            }
            if (vn->requires_grad) {
                ensure_grad(*vn);
                for (int j = 0; j < B; ++j) {
                    double* dv = vn->grad.data() + static_cast<size_t>(j) * W + off;
                    for (int i = 0; i < A; ++i) {
                        const double p = P[static_cast<size_t>(i) * B + j];
                        const double* go =
                            nd.grad.data() + static_cast<size_t>(i) * W + off;
                        for (int d = 0; d < D; ++d) dv[d] += p * go[d];
                    }
                }
            }
            // dS = P .* (dP - rowsum(dP .* P))
            for (int i = 0; i < A; ++i) {
                double dot = 0.0;
                for (int j = 0; j < B; ++j)
                    dot += dP[static_cast<size_t>(i) * B + j] *
                           P[static_cast<size_t>(i) * B + j];
                for (int j = 0; j < B; ++j) {
                    const size_t idx = static_cast<size_t>(i) * B + j;
                    dS[idx] = P[idx] * (dP[idx] - dot);
                }
            }
            if (qn->requires_grad) {
                ensure_grad(*qn);
                for (int i = 0; i < A; ++i) {
                    double* dq = qn->grad.data() + static_cast<size_t>(i) * W + off;
                    for (int j = 0; j < B; ++j) {
                        const double s = sc * dS[static_cast<size_t>(i) * B + j];
                        const double* kr =
                            kn->values.data() + static_cast<size_t>(j) * W + off;
                        for (int d = 0; d < D; ++d) dq[d] += s * kr[d];
                    }
                }
            }
            if (kn->requires_grad) {
                ensure_grad(*kn);
                for (int j = 0; j < B; ++j) {
                    double* dk = kn->grad.data() + static_cast<size_t>(j) * W + off;
                    for (int i = 0; i < A; ++i) {
                        const double s = sc * dS[static_cast<size_t>(i) * B + j];
                        const double* qr =
                            qn->values.data() + static_cast<size_t>(i) * W + off;
                        for (int d = 0; d < D; ++d) dk[d] += s * qr[d];
                    }
                }
            }
        }
    });

    std::vector<double> srow(B);
    for (int h = 0; h < heads; ++h) {
        const int off = h * D;
        double* P = probs->data() + static_cast<size_t>(h) * A * B;
        for (int i = 0; i < A; ++i) {
            const double* qr = qn->values.data() + static_cast<size_t>(i) * W + off;
            // scores
            for (int j = 0; j < B; ++j) {
                const double* kr = kn->values.data() + static_cast<size_t>(j) * W + off;
                double acc = 0.0;
#pragma omp simd reduction(+ : acc)
                for (int d = 0; d < D; ++d) acc += qr[d] * kr[d];
                srow[j] = acc * sc;
            }
            // stable softmax
            double mx = srow[0];
            for (int j = 1; j < B; ++j) mx = std::max(mx, srow[j]);
            double denom = 0.0;
            for (int j = 0; j < B; ++j) {
                srow[j] = std::exp(srow[j] - mx);
                denom += srow[j];
            }
            const double inv = 1.0 / denom;
            double* prow = P + static_cast<size_t>(i) * B;
            for (int j = 0; j < B; ++j) prow[j] = srow[j] * inv;
            // weighted values
            double* orow = out->values.data() + static_cast<size_t>(i) * W + off;
            std::fill(orow, orow + D, 0.0);
            for (int j = 0; j < B; ++j) {
                const double p = prow[j];
                const double* vr = vn->values.data() + static_cast<size_t>(j) * W + off;
                for (int d = 0; d < D; ++d) orow[d] += p * vr[d];
            }
        }
    }
    if (probe) {
        probe->heads = heads;
        probe->rows = A;
        probe->cols = B;
        probe->weights = *probs;
    }
    return Tensor(out);
}

Tensor head_inner_products(const Tensor& a, const Tensor& b, int heads) {
    if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(1))
        throw ShapeError("head_inner_products: expects (A,W) and (B,W), got " +
                         shape_str(a.shape()) + " and " + shape_str(b.shape()));
    const int A = a.dim(0), W = a.dim(1), B = b.dim(0);
    if (heads <= 0 || W % heads != 0)
        throw ShapeError("head_inner_products: width " + std::to_string(W) +
                         " not divisible by " + std::to_string(heads) + " heads");
    const int D = W / heads;
    auto an = a.node().get();
    auto bn = b.node().get();
    auto out = make_op({A, B, heads}, {a.node(), b.node()},
                       [an, bn, A, B, W, D, heads](Node& nd) {
        for (int i = 0; i < A; ++i)
            for (int j = 0; j < B; ++j) {
                const double* g = nd.grad.data() +
                                  (static_cast<size_t>(i) * B + j) * heads;
                const double* ar = an->values.data() + static_cast<size_t>(i) * W;
                const double* br = bn->values.data() + static_cast<size_t>(j) * W;
                if (an->requires_grad) {
                    ensure_grad(*an);
                    double* da = an->grad.data() + static_cast<size_t>(i) * W;
                    for (int h = 0; h < heads; ++h)
                        for (int d = 0; d < D; ++d)
                            da[h * D + d] += g[h] * br[h * D + d];
                }
                if (bn->requires_grad) {
                    ensure_grad(*bn);
                    double* db = bn->grad.data() + static_cast<size_t>(j) * W;
                    for (int h = 0; h < heads; ++h)
                        for (int d = 0; d < D; ++d)
                            db[h * D + d] += g[h] * ar[h * D + d];
                }
            }
    });
    for (int i = 0; i < A; ++i)
        for (int j = 0; j < B; ++j) {
            const double* ar = an->values.data() + static_cast<size_t>(i) * W;
            const double* br = bn->values.data() + static_cast<size_t>(j) * W;
            double* o = out->values.data() + (static_cast<size_t>(i) * B + j) * heads;
            for (int h = 0; h < heads; ++h) {
                double acc = 0.0;
#pragma omp simd reduction(+ : acc)
                for (int d = 0; d < D; ++d) acc += ar[h * D + d] * br[h * D + d];
                o[h] = acc;
            }
        }
    return Tensor(out);
}

// ---- gradient checking ----

std::string GradCheckReport::summary() const {
    std::ostringstream os;
    os << "grad_check: " << params.size() << " params, max rel err " << max_rel_err;
    for (const auto& e : params)
        if (e.rel_err == max_rel_err) {
            os << " (worst: " << e.name << "[" << e.index << "] analytic " << e.analytic
               << " vs numeric " << e.numeric << ")";
            break;
        }
    return os.str();
}

GradCheckReport grad_check(const std::function<Tensor()>& f, ParamList& params,
                           double h) {
    for (auto& p : params) p.tensor.zero_grad();
    Tensor loss = f();
    loss.backward();
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (auto& p : params) analytic.push_back(p.tensor.grad());

    GradCheckReport report;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        auto& vals = params[pi].tensor.mutable_values();
        GradCheckEntry entry;
        entry.name = params[pi].name;
        for (size_t i = 0; i < vals.size(); ++i) {
            const double orig = vals[i];
            vals[i] = orig + h;
            const double fp = f().value();
            vals[i] = orig - h;
            const double fm = f().value();
            vals[i] = orig;
            const double num = (fp - fm) / (2.0 * h);
            const double ana = analytic[pi][i];
            const double rel =
                std::abs(ana - num) / (1e-6 + std::max(std::abs(ana), std::abs(num)));
            if (rel >= entry.rel_err) {
                entry.rel_err = rel;
                entry.index = static_cast<int64_t>(i);
                entry.analytic = ana;
                entry.numeric = num;
            }
        }
        report.max_rel_err = std::max(report.max_rel_err, entry.rel_err);
        report.params.push_back(std::move(entry));
    }
    return report;
}

} // namespace basecast
