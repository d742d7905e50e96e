#include "basecast/model.hpp"

namespace basecast {

Model::Model(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate_or_throw();
    Rng root(cfg_.seed);
    Rng basis_rng = root.fork(1);
    Rng coef_rng = root.fork(2);
    Rng head_rng = root.fork(3);
    basis_ = make_basis_source(cfg_, basis_rng);
    coef_ = std::make_unique<CoefNet>(cfg_, coef_rng);
    head_ = std::make_unique<ForecastNet>(cfg_, head_rng);

    for (auto& p : basis_->parameters()) params_.push_back(p);
    for (auto& p : coef_->parameters()) params_.push_back(p);
    for (auto& p : head_->parameters()) params_.push_back(p);
}

void Model::check_history(const Tensor& x) const {
    if (x.ndim() != 2 || x.dim(0) != cfg_.channels || x.dim(1) != cfg_.input_len)
        throw ShapeError("history must be (" + std::to_string(cfg_.channels) + ", " +
                         std::to_string(cfg_.input_len) + "), got " +
                         shape_str(x.shape()));
}

Tensor Model::forecast(const Tensor& x, double tau, AttentionProbe* probe) const {
    check_history(x);
    Tensor z = basis_->generate(tau);
    auto [z_x, z_y] = split_basis(z, cfg_.input_len);
    Tensor c = coef_->compute(x, z_x, CoefView::History, probe);
    return head_->forward(c, z_y);
}

Model::TrainOutputs Model::training_forward(const Tensor& x, const Tensor& y,
                                            double tau, AttentionProbe* hist_probe,
                                            AttentionProbe* fut_probe) const {
    check_history(x);
    if (y.ndim() != 2 || y.dim(0) != cfg_.channels || y.dim(1) != cfg_.output_len)
        throw ShapeError("future must be (" + std::to_string(cfg_.channels) + ", " +
                         std::to_string(cfg_.output_len) + "), got " +
                         shape_str(y.shape()));
    Tensor z = basis_->generate(tau);
    auto [z_x, z_y] = split_basis(z, cfg_.input_len);
    TrainOutputs out;
    out.basis = z;
    out.coef_hist = coef_->compute(x, z_x, CoefView::History, hist_probe);
    out.coef_fut = coef_->compute(y, z_y, CoefView::Future, fut_probe);
    out.pred = head_->forward(out.coef_hist, z_y);
    return out;
}

} // namespace basecast
