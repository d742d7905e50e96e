#ifndef BASECAST_TENSOR_HPP
#define BASECAST_TENSOR_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "basecast/error.hpp"
#include "basecast/rng.hpp"

namespace basecast {

using Shape = std::vector<int>;

std::string shape_str(const Shape& s);
int64_t shape_size(const Shape& s);

namespace detail {
struct Node;
}

/**
 * Dense row-major tensor of doubles participating in a define-by-run
 * reverse-mode differentiation graph.
 *
 * A Tensor is a cheap handle; copies share the underlying node. Values are
 * immutable once an op has produced them, except for leaves, whose values
 * the optimizer rewrites between steps. Leaves created with requires_grad
 * keep a zero-initialized gradient buffer of the same shape, so parameters
 * that never enter a graph still report an all-zero gradient.
 *
 * backward() accumulates into existing gradients; repeated calls without
 * zero_grad() sum their contributions. The graph is rebuilt on every
 * forward pass, so there is no retain/release protocol to manage.
 *
 * Threading: graph construction and backward are single-threaded by
 * contract. Read-only sharing of finished tensors across threads is safe.
 */
class Tensor {
public:
    Tensor() = default;

    // ---- construction ----
    static Tensor zeros(Shape shape);
    static Tensor ones(Shape shape);
    static Tensor full(Shape shape, double value);
    static Tensor scalar(double value);
    static Tensor from_data(Shape shape, std::vector<double> data);
    /// Trainable leaf: requires_grad with a zero gradient buffer.
    static Tensor leaf(Shape shape, std::vector<double> data);
    /// Leaf with fan-in-scaled uniform init, U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    static Tensor uniform_leaf(Shape shape, int fan_in, Rng& rng);

    // ---- introspection ----
    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const;
    int ndim() const;
    int dim(int axis) const;
    int64_t size() const;
    bool requires_grad() const;
    bool all_finite() const;

    const std::vector<double>& values() const;
    const std::vector<double>& grad() const;
    /// Scalar tensors only.
    double value() const;
    /// 2-D element access (row, col); test convenience, not a hot path.
    double at(int i, int j) const;

    // ---- mutation (leaves only) ----
    std::vector<double>& mutable_values();
    std::vector<double>& mutable_grad();
    void zero_grad();

    // ---- autodiff ----
    /// Reverse pass from a scalar. Visits each reachable node exactly once
    /// in reverse topological order and accumulates into leaf gradients.
    void backward() const;
    /// Same values, detached from the graph (no gradient flows through).
    Tensor detach() const;

    // internal
    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
    const std::shared_ptr<detail::Node>& node() const { return node_; }

private:
    std::shared_ptr<detail::Node> node_;
};

/// Named trainable tensor; the unit the optimizer and checkpoints work with.
struct NamedParam {
    std::string name;
    Tensor tensor;
};
using ParamList = std::vector<NamedParam>;

// ---- elementwise and reduction ops ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
/// x: (..., n) plus a length-n vector broadcast over leading dims.
Tensor add_rowvec(const Tensor& x, const Tensor& v);
Tensor relu(const Tensor& a);
Tensor gelu(const Tensor& a);
Tensor exp_op(const Tensor& a);
Tensor log_op(const Tensor& a);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

// ---- linear algebra ----
/// (m x k) * (k x n) -> (m x n). Summation over the inner dimension runs in
/// ascending index order for every output element, matching a naive triple
/// loop bit for bit.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
/// matmul(x, w) + row-broadcast bias, as one graph node.
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b);

// ---- shape ops ----
Tensor reshape(const Tensor& a, Shape shape);
Tensor slice(const Tensor& a, int axis, int start, int len);
Tensor concat(std::span<const Tensor> parts, int axis);

// ---- normalization / attention ----
/// Softmax along `axis`, computed with max-subtraction.
Tensor softmax(const Tensor& a, int axis);
/// log(softmax) along `axis`, stable form.
Tensor log_softmax(const Tensor& a, int axis);
/// Per-row zero mean / unit variance over the trailing dim, then gamma*x + beta.
/// Population variance; eps inside the square root.
Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 double eps = 1e-5);

/// Row-major attention weights captured from a multihead_attention call:
/// one (A x B) matrix per head.
struct AttentionProbe {
    int heads = 0;
    int rows = 0;
    int cols = 0;
    std::vector<double> weights; // heads * rows * cols
};

/**
 * Scaled-dot-product attention over packed heads.
 * q: (A, H*D), k,v: (B, H*D); head h occupies columns [h*D, (h+1)*D).
 * Per head: softmax(Q_h K_h^T / sqrt(D)) V_h; outputs are packed the same way.
 */
Tensor multihead_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                           int heads, AttentionProbe* probe = nullptr);

/**
 * Per-head inner products: a (A, H*D), b (B, H*D) -> (A, B, H) with
 * out[i,j,h] = dot(a[i, h*D:(h+1)*D], b[j, h*D:(h+1)*D]).
 */
Tensor head_inner_products(const Tensor& a, const Tensor& b, int heads);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }

// ---- gradient checking ----
struct GradCheckEntry {
    std::string name;
    int64_t index = 0;        // flat index of the worst element
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_err = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> params; // one entry per parameter (its worst element)
    double max_rel_err = 0.0;
    bool ok(double tol) const { return max_rel_err < tol; }
    std::string summary() const;
};

/**
 * Central-difference check of d f / d theta for every element of every
 * parameter: numeric = (f(t+h) - f(t-h)) / 2h against the analytic gradient
 * from backward(). Relative error uses |a-n| / (1e-6 + max(|a|,|n|)).
 * Failures are reported, never thrown.
 */
GradCheckReport grad_check(const std::function<Tensor()>& f, ParamList& params,
                           double h = 1e-4);

} // namespace basecast

#endif // BASECAST_TENSOR_HPP
