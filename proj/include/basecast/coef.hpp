#ifndef BASECAST_COEF_HPP
#define BASECAST_COEF_HPP

#include <utility>
#include <vector>

#include "basecast/config.hpp"
#include "basecast/tensor.hpp"

namespace basecast {

/**
 * One cross-attention block: multihead attention of `a` over `b` (queries
 * from a, keys/values from b), restore projection, residual + layernorm,
 * feed-forward, residual + layernorm, in that order.
 *
 * Heads each have the full model width; the restore map takes the
 * concatenated heads back to model width.
 */
struct CabParams {
    Tensor wq, bq; // dim -> heads*dim
    Tensor wk, bk;
    Tensor wv, bv;
    Tensor wo, bo; // heads*dim -> dim
    Tensor ln1_g, ln1_b;
    Tensor ffn_w1, ffn_b1; // dim -> 2*dim
    Tensor ffn_w2, ffn_b2; // 2*dim -> dim
    Tensor ln2_g, ln2_b;

    static CabParams init(int dim, int heads, Rng& rng);
    void collect(const std::string& prefix, ParamList& out) const;
};

/// Paired blocks for one bidirectional layer; the two directions have
/// independent parameters.
struct BcabParams {
    CabParams ab; // updates a from b
    CabParams ba; // updates b from a

    static BcabParams init(int dim, int heads, Rng& rng);
    void collect(const std::string& prefix, ParamList& out) const;
};

Tensor cab_forward(const Tensor& a, const Tensor& b, const CabParams& p, int heads,
                   Activation act, AttentionProbe* probe = nullptr);

/// Both outputs are computed from the same layer inputs; there is no
/// sequential update inside a layer.
std::pair<Tensor, Tensor> bcab_forward(const Tensor& a, const Tensor& b,
                                       const BcabParams& p, int heads, Activation act,
                                       AttentionProbe* probe = nullptr);

enum class CoefView { History, Future };

/**
 * Similarity coefficients between a set of series and the basis.
 *
 * Both views share the BCAB stack and the head-mapping layer; only the
 * input projections differ (history: length I -> D_c, future: O -> D_c).
 * The result c has shape (C, N, H): the per-head inner product of the
 * stacked representations, unnormalized.
 */
class CoefNet {
public:
    CoefNet(const ModelConfig& cfg, Rng& rng);

    /// series: (C, L), basis_view: (N, L) with L = I or O per `view`.
    /// A probe, when given, captures the series-over-basis attention of the
    /// last BCAB layer.
    Tensor compute(const Tensor& series, const Tensor& basis_view, CoefView view,
                   AttentionProbe* probe = nullptr) const;

    ParamList parameters();

private:
    Tensor embed(const Tensor& rows, CoefView view, bool is_basis) const;

    int heads_;
    int dim_;
    Activation act_;
    Tensor series_hist_w_, series_hist_b_;
    Tensor series_fut_w_, series_fut_b_;
    Tensor basis_hist_w_, basis_hist_b_;
    Tensor basis_fut_w_, basis_fut_b_;
    std::vector<BcabParams> layers_;
    Tensor map_w_, map_b_; // dim -> heads*dim, shared by both sides and views
};

} // namespace basecast

#endif // BASECAST_COEF_HPP
