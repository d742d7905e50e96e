#include "basecast/optimizer.hpp"

#include <cmath>

namespace basecast {

AdaBelief::AdaBelief(const ParamList& params, AdaBeliefOptions opts)
    : params_(params), opts_(opts) {
    m_.reserve(params_.size());
    s_.reserve(params_.size());
    for (const auto& p : params_) {
        m_.emplace_back(p.tensor.size(), 0.0);
        s_.emplace_back(p.tensor.size(), 0.0);
    }
}

bool AdaBelief::step() {
    for (auto& p : params_)
        for (double g : p.tensor.grad())
            if (!std::isfinite(g)) {
                ++skipped_;
                return false;
            }

    ++t_;
    const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
        auto& theta = params_[i].tensor.mutable_values();
        const auto& grad = params_[i].tensor.grad();
        auto& m = m_[i];
        auto& s = s_[i];
        for (size_t j = 0; j < theta.size(); ++j) {
            const double g = grad[j];
            m[j] = opts_.beta1 * m[j] + (1.0 - opts_.beta1) * g;
            const double resid = g - m[j];
            s[j] = opts_.beta2 * s[j] + (1.0 - opts_.beta2) * resid * resid + opts_.eps;
            const double m_hat = m[j] / bc1;
            const double s_hat = s[j] / bc2;
            theta[j] -= opts_.lr * m_hat / (std::sqrt(s_hat) + opts_.eps);
            if (opts_.weight_decay > 0.0) theta[j] -= opts_.lr * opts_.weight_decay * theta[j];
        }
    }
    return true;
}

void AdaBelief::zero_grad() {
    for (auto& p : params_) p.tensor.zero_grad();
}

} // namespace basecast
