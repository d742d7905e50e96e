#include "basecast/coef.hpp"

#include "basecast/basis.hpp"

namespace basecast {

CabParams CabParams::init(int dim, int heads, Rng& rng) {
    const int inner = dim * heads;
    const int ffn_hidden = 2 * dim;
    CabParams p;
    p.wq = Tensor::uniform_leaf({dim, inner}, dim, rng);
    p.bq = Tensor::uniform_leaf({inner}, dim, rng);
    p.wk = Tensor::uniform_leaf({dim, inner}, dim, rng);
    p.bk = Tensor::uniform_leaf({inner}, dim, rng);
    p.wv = Tensor::uniform_leaf({dim, inner}, dim, rng);
    p.bv = Tensor::uniform_leaf({inner}, dim, rng);
    p.wo = Tensor::uniform_leaf({inner, dim}, inner, rng);
    p.bo = Tensor::uniform_leaf({dim}, inner, rng);
    p.ln1_g = Tensor::leaf({dim}, std::vector<double>(dim, 1.0));
    p.ln1_b = Tensor::leaf({dim}, std::vector<double>(dim, 0.0));
    p.ffn_w1 = Tensor::uniform_leaf({dim, ffn_hidden}, dim, rng);
    p.ffn_b1 = Tensor::uniform_leaf({ffn_hidden}, dim, rng);
    p.ffn_w2 = Tensor::uniform_leaf({ffn_hidden, dim}, ffn_hidden, rng);
    p.ffn_b2 = Tensor::uniform_leaf({dim}, ffn_hidden, rng);
    p.ln2_g = Tensor::leaf({dim}, std::vector<double>(dim, 1.0));
    p.ln2_b = Tensor::leaf({dim}, std::vector<double>(dim, 0.0));
    return p;
}

void CabParams::collect(const std::string& prefix, ParamList& out) const {
    out.push_back({prefix + ".wq", wq});
    out.push_back({prefix + ".bq", bq});
    out.push_back({prefix + ".wk", wk});
    out.push_back({prefix + ".bk", bk});
    out.push_back({prefix + ".wv", wv});
    out.push_back({prefix + ".bv", bv});
    out.push_back({prefix + ".wo", wo});
    out.push_back({prefix + ".bo", bo});
    out.push_back({prefix + ".ln1.g", ln1_g});
    out.push_back({prefix + ".ln1.b", ln1_b});
    out.push_back({prefix + ".ffn.w1", ffn_w1});
    out.push_back({prefix + ".ffn.b1", ffn_b1});
    out.push_back({prefix + ".ffn.w2", ffn_w2});
    out.push_back({prefix + ".ffn.b2", ffn_b2});
    out.push_back({prefix + ".ln2.g", ln2_g});
    out.push_back({prefix + ".ln2.b", ln2_b});
}

BcabParams BcabParams::init(int dim, int heads, Rng& rng) {
    BcabParams p;
    p.ab = CabParams::init(dim, heads, rng);
    p.ba = CabParams::init(dim, heads, rng);
    return p;
}

void BcabParams::collect(const std::string& prefix, ParamList& out) const {
    ab.collect(prefix + ".ab", out);
    ba.collect(prefix + ".ba", out);
}

Tensor cab_forward(const Tensor& a, const Tensor& b, const CabParams& p, int heads,
                   Activation act, AttentionProbe* probe) {
    Tensor q = affine(a, p.wq, p.bq);
    Tensor k = affine(b, p.wk, p.bk);
    Tensor v = affine(b, p.wv, p.bv);
    Tensor attended = multihead_attention(q, k, v, heads, probe);
    Tensor restored = affine(attended, p.wo, p.bo);
    Tensor ahat = layernorm(add(restored, a), p.ln1_g, p.ln1_b);
    Tensor ffn = affine(activate(affine(ahat, p.ffn_w1, p.ffn_b1), act), p.ffn_w2,
                        p.ffn_b2);
    return layernorm(add(ffn, ahat), p.ln2_g, p.ln2_b);
}

std::pair<Tensor, Tensor> bcab_forward(const Tensor& a, const Tensor& b,
                                       const BcabParams& p, int heads, Activation act,
                                       AttentionProbe* probe) {
    Tensor a_next = cab_forward(a, b, p.ab, heads, act, probe);
    Tensor b_next = cab_forward(b, a, p.ba, heads, act);
    return {a_next, b_next};
}

CoefNet::CoefNet(const ModelConfig& cfg, Rng& rng)
    : heads_(cfg.heads), dim_(cfg.coef_dim), act_(cfg.activation) {
    const int i = cfg.input_len, o = cfg.output_len, d = cfg.coef_dim;
    series_hist_w_ = Tensor::uniform_leaf({i, d}, i, rng);
    series_hist_b_ = Tensor::uniform_leaf({d}, i, rng);
    series_fut_w_ = Tensor::uniform_leaf({o, d}, o, rng);
    series_fut_b_ = Tensor::uniform_leaf({d}, o, rng);
    basis_hist_w_ = Tensor::uniform_leaf({i, d}, i, rng);
    basis_hist_b_ = Tensor::uniform_leaf({d}, i, rng);
    basis_fut_w_ = Tensor::uniform_leaf({o, d}, o, rng);
    basis_fut_b_ = Tensor::uniform_leaf({d}, o, rng);
    layers_.reserve(cfg.bcab_layers);
    for (int m = 0; m < cfg.bcab_layers; ++m)
        layers_.push_back(BcabParams::init(d, heads_, rng));
    map_w_ = Tensor::uniform_leaf({d, d * heads_}, d, rng);
    map_b_ = Tensor::uniform_leaf({d * heads_}, d, rng);
}

Tensor CoefNet::embed(const Tensor& rows, CoefView view, bool is_basis) const {
    const Tensor& w = is_basis
                          ? (view == CoefView::History ? basis_hist_w_ : basis_fut_w_)
                          : (view == CoefView::History ? series_hist_w_ : series_fut_w_);
    const Tensor& b = is_basis
                          ? (view == CoefView::History ? basis_hist_b_ : basis_fut_b_)
                          : (view == CoefView::History ? series_hist_b_ : series_fut_b_);
    if (rows.ndim() != 2 || rows.dim(1) != w.dim(0))
        throw ShapeError("embed: rows " + shape_str(rows.shape()) +
                         " do not match projection input length " +
                         std::to_string(w.dim(0)));
    return affine(rows, w, b);
}

Tensor CoefNet::compute(const Tensor& series, const Tensor& basis_view, CoefView view,
                        AttentionProbe* probe) const {
    Tensor x = embed(series, view, false);
    Tensor z = embed(basis_view, view, true);
    for (size_t m = 0; m < layers_.size(); ++m) {
        AttentionProbe* layer_probe = (m + 1 == layers_.size()) ? probe : nullptr;
        std::tie(x, z) = bcab_forward(x, z, layers_[m], heads_, act_, layer_probe);
    }
    Tensor xh = affine(x, map_w_, map_b_);
    Tensor zh = affine(z, map_w_, map_b_);
    return head_inner_products(xh, zh, heads_);
}

ParamList CoefNet::parameters() {
    ParamList out;
    out.push_back({"coef.series_hist.w", series_hist_w_});
    out.push_back({"coef.series_hist.b", series_hist_b_});
    out.push_back({"coef.series_fut.w", series_fut_w_});
    out.push_back({"coef.series_fut.b", series_fut_b_});
    out.push_back({"coef.basis_hist.w", basis_hist_w_});
    out.push_back({"coef.basis_hist.b", basis_hist_b_});
    out.push_back({"coef.basis_fut.w", basis_fut_w_});
    out.push_back({"coef.basis_fut.b", basis_fut_b_});
    for (size_t m = 0; m < layers_.size(); ++m)
        layers_[m].collect("coef.bcab" + std::to_string(m), out);
    out.push_back({"coef.map.w", map_w_});
    out.push_back({"coef.map.b", map_b_});
    return out;
}

} // namespace basecast
