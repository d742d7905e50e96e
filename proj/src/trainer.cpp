#include "basecast/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "basecast/losses.hpp"
#include "basecast/textio.hpp"

namespace basecast {

Dataset prepare_dataset(RawSeries series, const ModelConfig& cfg) {
    if (series.channels() != cfg.channels)
        throw ConfigError("dataset has " + std::to_string(series.channels()) +
                          " channels but the config expects " +
                          std::to_string(cfg.channels));
    Dataset d;
    d.total_len = series.rows();
    d.split = chrono_split(series, cfg.split_train, cfg.split_val, cfg.split_test,
                           cfg.input_len, cfg.output_len);
    d.norm = Normalizer::fit(series, d.split.train);
    d.series = std::move(series);
    return d;
}

std::string TrainReport::to_csv(const ModelConfig& cfg) const {
    std::string out = "# config: ";
    // compact the config echo onto one comment line
    for (char ch : cfg.to_json())
        if (ch != '\n' && ch != ' ') out += ch;
    out += "\nepoch,train_pred,train_align,train_smooth,train_total,val_pred\n";
    for (const auto& e : epochs) {
        out += std::to_string(e.epoch);
        out += ',';
        append_double(out, e.train_pred);
        out += ',';
        append_double(out, e.train_align);
        out += ',';
        append_double(out, e.train_smooth);
        out += ',';
        append_double(out, e.train_total);
        out += ',';
        append_double(out, e.val_pred);
        out += '\n';
    }
    out += "# best_epoch=" + std::to_string(best_epoch) + "\n";
    out += "# stop_reason=" + stop_reason + "\n";
    if (skipped_steps > 0)
        out += "# skipped_steps=" + std::to_string(skipped_steps) + "\n";
    return out;
}

std::string TrainReport::timing_csv() const {
    std::string out = "epoch,seconds\n";
    for (const auto& e : epochs) {
        out += std::to_string(e.epoch);
        out += ',';
        append_double(out, e.seconds);
        out += '\n';
    }
    return out;
}

namespace {

std::vector<std::vector<double>> snapshot_params(ParamList& params) {
    std::vector<std::vector<double>> copy;
    copy.reserve(params.size());
    for (auto& p : params) copy.push_back(p.tensor.values());
    return copy;
}

void restore_params(ParamList& params, const std::vector<std::vector<double>>& copy) {
    for (size_t i = 0; i < params.size(); ++i)
        params[i].tensor.mutable_values() = copy[i];
}

double validation_pred_loss(const Model& model, const Dataset& data,
                            const std::vector<int64_t>& offsets) {
    const ModelConfig& cfg = model.config();
    double acc = 0.0;
    for (int64_t t : offsets) {
        WindowBatch w = make_window(data.series, data.norm, t, cfg.input_len,
                                    cfg.output_len, data.total_len);
        Tensor pred = model.forecast(w.x, w.tau);
        const auto& pv = pred.values();
        const auto& yv = w.y.values();
        double sq = 0.0;
        for (size_t i = 0; i < pv.size(); ++i) {
            const double d = pv[i] - yv[i];
            sq += d * d;
        }
        acc += sq / static_cast<double>(pv.size());
    }
    return acc / static_cast<double>(offsets.size());
}

} // namespace

TrainReport train(Model& model, const Dataset& data, std::ostream* log) {
    const ModelConfig& cfg = model.config();
    auto& params = model.parameters();
    AdaBelief opt(params, {cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps, cfg.weight_decay});
    const LossWeights weights{cfg.w_pred, cfg.w_align, cfg.w_smooth};

    auto train_offsets = window_offsets(data.split.train, cfg.input_len, cfg.output_len,
                                        cfg.train_stride);
    auto val_offsets = window_offsets(data.split.val, cfg.input_len, cfg.output_len,
                                      cfg.eval_stride);
    if (train_offsets.empty()) throw Error("train segment yields no windows");
    if (val_offsets.empty()) throw Error("val segment yields no windows");

    Rng shuffle_root = Rng(cfg.seed).fork(500);

    TrainReport report;
    EarlyStopping stopping(cfg.patience);
    auto best = snapshot_params(params); // initial weights are the fallback
    bool aborted = false;

    for (int epoch = 1; epoch <= cfg.epochs && !aborted; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        auto order = train_offsets;
        shuffle_root.fork(static_cast<uint64_t>(epoch)).shuffle(order);

        double sum_pred = 0, sum_align = 0, sum_smooth = 0, sum_total = 0;
        int64_t seen = 0;

        for (size_t begin = 0; begin < order.size() && !aborted;
             begin += static_cast<size_t>(cfg.batch_size)) {
            const size_t count =
                std::min(static_cast<size_t>(cfg.batch_size), order.size() - begin);
            opt.zero_grad();
            for (size_t k = 0; k < count && !aborted; ++k) {
                WindowBatch w = make_window(data.series, data.norm, order[begin + k],
                                            cfg.input_len, cfg.output_len, data.total_len);
                auto outs = model.training_forward(w.x, w.y, w.tau);
                Tensor l_pred = mse_loss(outs.pred, w.y);
                Tensor l_align = infonce_loss(outs.coef_hist, outs.coef_fut, cfg.epsilon);
                Tensor l_smooth = smoothness_loss(outs.basis);
                Tensor total;
                try {
                    total = total_loss(l_pred, l_align, l_smooth, weights);
                } catch (const NumericError& e) {
                    if (log) *log << "abort: " << e.what() << "\n";
                    aborted = true;
                    break;
                }
                sum_pred += l_pred.value();
                sum_align += l_align.value();
                sum_smooth += l_smooth.value();
                sum_total += total.value();
                ++seen;
                scale(total, 1.0 / static_cast<double>(count)).backward();
            }
            if (!aborted && !opt.step() && log)
                *log << "warning: optimizer step skipped (non-finite gradient)\n";
        }

        if (aborted) {
            report.stop_reason = "nan-abort";
            break;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_pred = sum_pred / static_cast<double>(seen);
        stats.train_align = sum_align / static_cast<double>(seen);
        stats.train_smooth = sum_smooth / static_cast<double>(seen);
        stats.train_total = sum_total / static_cast<double>(seen);
        stats.val_pred = validation_pred_loss(model, data, val_offsets);
        stats.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.epochs.push_back(stats);

        if (log)
            *log << "epoch " << epoch << ": train " << stats.train_total << " (pred "
                 << stats.train_pred << ", align " << stats.train_align << ", smooth "
                 << stats.train_smooth << "), val pred " << stats.val_pred << "\n";

        switch (stopping.observe(stats.val_pred)) {
            case EarlyStopping::Action::NewBest:
                best = snapshot_params(params);
                report.best_epoch = epoch;
                break;
            case EarlyStopping::Action::Continue:
                break;
            case EarlyStopping::Action::Stop:
                report.stop_reason = "early-stopping";
                break;
        }
        if (!report.stop_reason.empty()) break;
    }

    if (report.stop_reason.empty()) report.stop_reason = "max-epochs";
    report.skipped_steps = opt.skipped_steps();
    restore_params(params, best);
    return report;
}

EvalMetrics evaluate_with(const std::function<Tensor(const WindowBatch&)>& predict,
                          const Dataset& data, const SeriesSegment& segment,
                          int input_len, int output_len, int stride) {
    auto offsets = window_offsets(segment, input_len, output_len, stride);
    if (offsets.empty())
        throw Error("segment yields no evaluation windows (length " +
                    std::to_string(segment.length) + ")");
    const int channels = data.series.channels();
    double se = 0.0, ae = 0.0;
    int64_t n = 0;
    for (int64_t t : offsets) {
        WindowBatch w =
            make_window(data.series, data.norm, t, input_len, output_len, data.total_len);
        Tensor pred = predict(w);
        for (int c = 0; c < channels; ++c)
            for (int o = 0; o < output_len; ++o) {
                const double p = data.norm.invert(
                    pred.values()[static_cast<size_t>(c) * output_len + o], c);
                const double target = data.series.at(t + input_len + o, c);
                const double d = p - target;
                se += d * d;
                ae += std::abs(d);
                ++n;
            }
    }
    EvalMetrics m;
    m.mse = se / static_cast<double>(n);
    m.mae = ae / static_cast<double>(n);
    m.windows = static_cast<int64_t>(offsets.size());
    return m;
}

EvalMetrics evaluate(const Model& model, const Dataset& data,
                     const SeriesSegment& segment) {
    const ModelConfig& cfg = model.config();
    return evaluate_with(
        [&](const WindowBatch& w) { return model.forecast(w.x, w.tau); }, data, segment,
        cfg.input_len, cfg.output_len, cfg.eval_stride);
}

EvalMetrics persistence_metrics(const Dataset& data, const SeriesSegment& segment,
                                int input_len, int output_len, int stride) {
    auto offsets = window_offsets(segment, input_len, output_len, stride);
    if (offsets.empty()) throw Error("segment yields no evaluation windows");
    const int channels = data.series.channels();
    double se = 0.0, ae = 0.0;
    int64_t n = 0;
    for (int64_t t : offsets) {
        for (int c = 0; c < channels; ++c)
            for (int o = 0; o < output_len; ++o) {
                // repeat the last output_len history values, tiling when O > I
                int64_t src = static_cast<int64_t>(input_len) - output_len + o;
                src = ((src % input_len) + input_len) % input_len;
                const double p = data.series.at(t + src, c);
                const double target = data.series.at(t + input_len + o, c);
                const double d = p - target;
                se += d * d;
                ae += std::abs(d);
                ++n;
            }
    }
    EvalMetrics m;
    m.mse = se / static_cast<double>(n);
    m.mae = ae / static_cast<double>(n);
    m.windows = static_cast<int64_t>(offsets.size());
    return m;
}

double median(std::vector<double> values) {
    if (values.empty()) throw Error("median of an empty set");
    std::sort(values.begin(), values.end());
    const size_t mid = values.size() / 2;
    if (values.size() % 2 == 1) return values[mid];
    return 0.5 * (values[mid - 1] + values[mid]);
}

std::vector<AblationResult> run_ablation(const std::vector<AblationVariant>& variants,
                                         const std::vector<uint64_t>& seeds,
                                         const DataProvider& provider,
                                         std::ostream* log) {
    std::vector<AblationResult> results;
    for (const auto& variant : variants) {
        AblationResult res;
        res.name = variant.name;
        for (uint64_t seed : seeds) {
            try {
                ModelConfig cfg = variant.config;
                cfg.seed = seed;
                cfg.validate_or_throw();
                Dataset data = prepare_dataset(provider(seed), cfg);
                Model model(cfg);
                if (log) *log << "ablation: " << variant.name << " seed " << seed << "\n";
                train(model, data, log);
                EvalMetrics m = evaluate(model, data, data.split.test);
                res.mses.push_back(m.mse);
                res.maes.push_back(m.mae);
            } catch (const std::exception& e) {
                ++res.failures;
                if (res.first_error.empty()) res.first_error = e.what();
                if (log)
                    *log << "ablation: " << variant.name << " seed " << seed
                         << " failed: " << e.what() << "\n";
            }
        }
        if (!res.mses.empty()) {
            res.median_mse = median(res.mses);
            res.median_mae = median(res.maes);
        }
        results.push_back(std::move(res));
    }
    return results;
}

std::string ablation_csv(const std::vector<AblationResult>& results) {
    std::string out = "variant,runs,failures,median_mse,median_mae\n";
    for (const auto& r : results) {
        out += r.name;
        out += ',';
        out += std::to_string(r.mses.size());
        out += ',';
        out += std::to_string(r.failures);
        out += ',';
        append_double(out, r.median_mse);
        out += ',';
        append_double(out, r.median_mae);
        out += '\n';
    }
    return out;
}

} // namespace basecast
