#include "basecast/losses.hpp"

#include <cmath>

namespace basecast {

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape())
        throw ShapeError("mse_loss: shape mismatch " + shape_str(pred.shape()) + " vs " +
                         shape_str(target.shape()));
    Tensor err = sub(pred, target);
    return mean(mul(err, err));
}

Tensor infonce_loss(const Tensor& c_x, const Tensor& c_y, double epsilon) {
    if (epsilon <= 0.0)
        throw ConfigError("infonce_loss: temperature must be > 0, got " +
                          std::to_string(epsilon));
    if (c_x.shape() != c_y.shape())
        throw ShapeError("infonce_loss: shape mismatch " + shape_str(c_x.shape()) +
                         " vs " + shape_str(c_y.shape()));
    if (c_x.ndim() != 3)
        throw ShapeError("infonce_loss: expected (C, N, H), got " +
                         shape_str(c_x.shape()));
    const int channels = c_x.dim(0), n = c_x.dim(1), heads = c_x.dim(2);

    // constant mask selecting the diagonal (positive pairs)
    std::vector<double> diag(static_cast<size_t>(n) * n, 0.0);
    for (int j = 0; j < n; ++j) diag[static_cast<size_t>(j) * n + j] = 1.0;
    Tensor diag_mask = Tensor::from_data({n, n}, std::move(diag));

    Tensor acc;
    for (int i = 0; i < channels; ++i) {
        Tensor a = reshape(slice(c_x, 0, i, 1), {n, heads});
        Tensor b = reshape(slice(c_y, 0, i, 1), {n, heads});
        Tensor logits = scale(matmul(a, transpose(b)), 1.0 / epsilon); // (N, N)
        Tensor log_probs = log_softmax(logits, 1);
        Tensor picked = sum(mul(log_probs, diag_mask));
        acc = acc.defined() ? add(acc, picked) : picked;
    }
    return scale(acc, -1.0 / (static_cast<double>(channels) * n));
}

Tensor smoothness_loss(const Tensor& z) {
    if (z.ndim() != 2)
        throw ShapeError("smoothness_loss: expected a 2-D basis, got " +
                         shape_str(z.shape()));
    const int cols = z.dim(1);
    if (cols < 3)
        throw ConfigError("smoothness_loss: needs at least 3 columns, got " +
                          std::to_string(cols));
    Tensor left = slice(z, 1, 0, cols - 2);
    Tensor center = slice(z, 1, 1, cols - 2);
    Tensor right = slice(z, 1, 2, cols - 2);
    Tensor second_diff = add(sub(left, scale(center, 2.0)), right);
    return sum(mul(second_diff, second_diff));
}

Tensor total_loss(const Tensor& pred, const Tensor& align, const Tensor& smooth,
                  const LossWeights& weights) {
    if (!std::isfinite(pred.value()))
        throw NumericError("total_loss: prediction term is not finite");
    if (!std::isfinite(align.value()))
        throw NumericError("total_loss: alignment term is not finite");
    if (!std::isfinite(smooth.value()))
        throw NumericError("total_loss: smoothness term is not finite");
    return add(add(scale(pred, weights.pred), scale(align, weights.align)),
               scale(smooth, weights.smooth));
}

} // namespace basecast
