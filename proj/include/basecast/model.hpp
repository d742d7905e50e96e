#ifndef BASECAST_MODEL_HPP
#define BASECAST_MODEL_HPP

#include <memory>

#include "basecast/basis.hpp"
#include "basecast/coef.hpp"
#include "basecast/config.hpp"
#include "basecast/forecast.hpp"

namespace basecast {

/**
 * The assembled forecaster: basis source + coefficient network + forecast
 * head. Construction validates the configuration and seeds all parameter
 * initialization from cfg.seed.
 *
 * Inference never sees the future window; forecast() takes only the history
 * and the window timestamp.
 */
class Model {
public:
    explicit Model(const ModelConfig& cfg);

    /// x: (C, I) normalized history. Returns (C, O) normalized predictions.
    Tensor forecast(const Tensor& x, double tau, AttentionProbe* probe = nullptr) const;

    struct TrainOutputs {
        Tensor pred;      // (C, O)
        Tensor coef_hist; // (C, N, H)
        Tensor coef_fut;  // (C, N, H)
        Tensor basis;     // (N, I+O)
    };

    /// Both-view forward for training: the prediction comes from the
    /// history-view coefficients; the future view is encoded only for the
    /// alignment loss. Probes capture last-layer attention per view.
    TrainOutputs training_forward(const Tensor& x, const Tensor& y, double tau,
                                  AttentionProbe* hist_probe = nullptr,
                                  AttentionProbe* fut_probe = nullptr) const;

    ParamList& parameters() { return params_; }
    const ModelConfig& config() const { return cfg_; }
    BasisSource& basis_source() { return *basis_; }

private:
    void check_history(const Tensor& x) const;

    ModelConfig cfg_;
    std::unique_ptr<BasisSource> basis_;
    std::unique_ptr<CoefNet> coef_;
    std::unique_ptr<ForecastNet> head_;
    ParamList params_;
};

} // namespace basecast

#endif // BASECAST_MODEL_HPP
