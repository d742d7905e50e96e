#ifndef BASECAST_OPTIMIZER_HPP
#define BASECAST_OPTIMIZER_HPP

#include <cstdint>
#include <vector>

#include "basecast/tensor.hpp"

namespace basecast {

struct AdaBeliefOptions {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;        // added inside the s update and in the denominator
    double weight_decay = 0.0; // decoupled (applied directly to the weights)
};

/**
 * AdaBelief: Adam-shaped updates driven by the belief residual (g - m)^2
 * instead of g^2.
 *
 *   m <- b1*m + (1-b1)*g
 *   s <- b2*s + (1-b2)*(g - m)^2 + eps
 *   theta <- theta - lr * (m / (1-b1^t)) / (sqrt(s / (1-b2^t)) + eps)
 *
 * A step with any non-finite gradient is skipped entirely: no state
 * advances, the incident is counted, and step() returns false.
 */
class AdaBelief {
public:
    AdaBelief(const ParamList& params, AdaBeliefOptions opts);

    bool step();
    void zero_grad();

    int64_t step_count() const { return t_; }
    int64_t skipped_steps() const { return skipped_; }

private:
    ParamList params_;
    AdaBeliefOptions opts_;
    std::vector<std::vector<double>> m_, s_;
    int64_t t_ = 0;
    int64_t skipped_ = 0;
};

} // namespace basecast

#endif // BASECAST_OPTIMIZER_HPP
