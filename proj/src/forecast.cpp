#include "basecast/forecast.hpp"

#include "basecast/basis.hpp"

namespace basecast {

BottleneckMlp BottleneckMlp::init(int width, int bottleneck, Rng& rng) {
    BottleneckMlp m;
    m.w1 = Tensor::uniform_leaf({width, bottleneck}, width, rng);
    m.b1 = Tensor::uniform_leaf({bottleneck}, width, rng);
    m.w2 = Tensor::uniform_leaf({bottleneck, bottleneck}, bottleneck, rng);
    m.b2 = Tensor::uniform_leaf({bottleneck}, bottleneck, rng);
    m.w3 = Tensor::uniform_leaf({bottleneck, bottleneck}, bottleneck, rng);
    m.b3 = Tensor::uniform_leaf({bottleneck}, bottleneck, rng);
    m.w4 = Tensor::uniform_leaf({bottleneck, width}, bottleneck, rng);
    m.b4 = Tensor::uniform_leaf({width}, bottleneck, rng);
    return m;
}

Tensor BottleneckMlp::apply(const Tensor& rows, Activation act) const {
    Tensor h = activate(affine(rows, w1, b1), act);
    h = activate(affine(h, w2, b2), act);
    h = activate(affine(h, w3, b3), act);
    return affine(h, w4, b4);
}

void BottleneckMlp::collect(const std::string& prefix, ParamList& out) const {
    out.push_back({prefix + ".l1.w", w1});
    out.push_back({prefix + ".l1.b", b1});
    out.push_back({prefix + ".l2.w", w2});
    out.push_back({prefix + ".l2.b", b2});
    out.push_back({prefix + ".l3.w", w3});
    out.push_back({prefix + ".l3.b", b3});
    out.push_back({prefix + ".l4.w", w4});
    out.push_back({prefix + ".l4.b", b4});
}

ForecastNet::ForecastNet(const ModelConfig& cfg, Rng& rng)
    : heads_(cfg.heads), act_(cfg.activation),
      proj_(BottleneckMlp::init(cfg.output_len, cfg.bottleneck, rng)),
      fuse_(BottleneckMlp::init(cfg.output_len, cfg.bottleneck, rng)) {
    if (cfg.output_len % cfg.heads != 0)
        throw ConfigError("H must divide O (heads " + std::to_string(cfg.heads) +
                          ", output_len " + std::to_string(cfg.output_len) + ")");
}

Tensor ForecastNet::project_future_basis(const Tensor& z_y) const {
    if (z_y.ndim() != 2 || z_y.dim(1) != proj_.w1.dim(0))
        throw ShapeError("project_future_basis: expected (N, " +
                         std::to_string(proj_.w1.dim(0)) + "), got " +
                         shape_str(z_y.shape()));
    return proj_.apply(z_y, act_);
}

Tensor ForecastNet::split_heads(const Tensor& z_hat, int heads) {
    if (z_hat.ndim() != 2 || z_hat.dim(1) % heads != 0)
        throw ShapeError("split_heads: head count " + std::to_string(heads) +
                         " must divide columns of " + shape_str(z_hat.shape()));
    // row-major reshape IS the contiguous chunking of the O axis
    return reshape(z_hat, {z_hat.dim(0), heads, z_hat.dim(1) / heads});
}

Tensor ForecastNet::aggregate(const Tensor& c, const Tensor& z_tilde) {
    if (c.ndim() != 3 || z_tilde.ndim() != 3)
        throw ShapeError("aggregate: expected c (C,N,H) and z (N,H,O/H)");
    const int n = c.dim(1), heads = c.dim(2);
    if (z_tilde.dim(0) != n || z_tilde.dim(1) != heads)
        throw ShapeError("aggregate: inconsistent shapes c " + shape_str(c.shape()) +
                         " vs z " + shape_str(z_tilde.shape()));
    const int channels = c.dim(0), horizon = z_tilde.dim(2);

    std::vector<Tensor> per_head;
    per_head.reserve(heads);
    for (int h = 0; h < heads; ++h) {
        Tensor ch = reshape(slice(c, 2, h, 1), {channels, n});        // (C, N)
        Tensor zh = reshape(slice(z_tilde, 1, h, 1), {n, horizon});   // (N, O/H)
        per_head.push_back(reshape(matmul(ch, zh), {channels, 1, horizon}));
    }
    return concat(per_head, 1); // (C, H, O/H)
}

Tensor ForecastNet::fuse_heads(const Tensor& y_tilde) const {
    if (y_tilde.ndim() != 3)
        throw ShapeError("fuse_heads: expected (C, H, O/H), got " +
                         shape_str(y_tilde.shape()));
    const int channels = y_tilde.dim(0);
    const int width = y_tilde.dim(1) * y_tilde.dim(2);
    Tensor flat = reshape(y_tilde, {channels, width});
    return fuse_.apply(flat, act_);
}

Tensor ForecastNet::forward(const Tensor& c, const Tensor& z_y) const {
    Tensor z_hat = project_future_basis(z_y);
    Tensor z_tilde = split_heads(z_hat, heads_);
    Tensor y_tilde = aggregate(c, z_tilde);
    return fuse_heads(y_tilde);
}

ParamList ForecastNet::parameters() {
    ParamList out;
    proj_.collect("forecast.proj", out);
    fuse_.collect("forecast.fuse", out);
    return out;
}

} // namespace basecast
