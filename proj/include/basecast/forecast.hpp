#ifndef BASECAST_FORECAST_HPP
#define BASECAST_FORECAST_HPP

#include "basecast/config.hpp"
#include "basecast/tensor.hpp"

namespace basecast {

/// Four affine layers, width -> bottleneck -> bottleneck -> bottleneck -> width,
/// nonlinearities between layers, linear final layer. Applied row-wise.
struct BottleneckMlp {
    Tensor w1, b1, w2, b2, w3, b3, w4, b4;

    static BottleneckMlp init(int width, int bottleneck, Rng& rng);
    Tensor apply(const Tensor& rows, Activation act) const;
    void collect(const std::string& prefix, ParamList& out) const;
};

/**
 * Turns coefficients and the future part of the basis into predictions:
 * project z_y row-wise, split into H head blocks, aggregate the N bases per
 * head with the coefficients, concatenate heads, and fuse row-wise.
 */
class ForecastNet {
public:
    ForecastNet(const ModelConfig& cfg, Rng& rng);

    /// (N, O) -> (N, O), row-wise bottleneck MLP.
    Tensor project_future_basis(const Tensor& z_y) const;

    /// (N, O) -> (N, H, O/H), contiguous chunks of the O axis.
    static Tensor split_heads(const Tensor& z_hat, int heads);

    /// out[i,h,:] = sum_j c[i,j,h] * z[j,h,:]; c: (C,N,H), z: (N,H,O/H).
    static Tensor aggregate(const Tensor& c, const Tensor& z_tilde);

    /// (C, H, O/H) -> (C, O): concatenate heads, then the fusion MLP.
    Tensor fuse_heads(const Tensor& y_tilde) const;

    /// Full path from (c, z_y) to predictions (C, O).
    Tensor forward(const Tensor& c, const Tensor& z_y) const;

    ParamList parameters();

private:
    int heads_;
    Activation act_;
    BottleneckMlp proj_, fuse_;
};

} // namespace basecast

#endif // BASECAST_FORECAST_HPP
