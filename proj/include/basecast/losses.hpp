#ifndef BASECAST_LOSSES_HPP
#define BASECAST_LOSSES_HPP

#include "basecast/tensor.hpp"

namespace basecast {

/// Weights for the three training objectives; the defaults reduce the total
/// to the plain unweighted sum.
struct LossWeights {
    double pred = 1.0;
    double align = 1.0;
    double smooth = 1.0;
};

/// Mean over all C*O elements of the squared error. Shapes must match.
Tensor mse_loss(const Tensor& pred, const Tensor& target);

/**
 * Contrastive alignment between the two coefficient views, both (C, N, H).
 *
 * For each series i and basis j, the anchor c_x[i,j,:] scores against every
 * c_y[i,k,:] (dot over the head axis, divided by the temperature); the
 * matching k = j is the positive and the denominator runs over all N.
 * Result is the mean of -log softmax terms over the C*N pairs, computed in
 * stabilized (max-subtracted) form.
 */
Tensor infonce_loss(const Tensor& c_x, const Tensor& c_y, double epsilon);

/**
 * Curvature penalty: the summed square of the second difference of each
 * basis row across time, equal to ||z S||^2 for the banded [1, -2, 1]
 * matrix. Adding any per-row constant or linear-in-time term leaves the
 * value unchanged. z needs at least 3 columns. Unnormalized sum.
 */
Tensor smoothness_loss(const Tensor& z);

/// w_pred*pred + w_align*align + w_smooth*smooth. A non-finite component
/// throws NumericError naming the term.
Tensor total_loss(const Tensor& pred, const Tensor& align, const Tensor& smooth,
                  const LossWeights& weights);

} // namespace basecast

#endif // BASECAST_LOSSES_HPP
