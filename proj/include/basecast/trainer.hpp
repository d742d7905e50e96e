#ifndef BASECAST_TRAINER_HPP
#define BASECAST_TRAINER_HPP

#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "basecast/data.hpp"
#include "basecast/model.hpp"
#include "basecast/optimizer.hpp"

namespace basecast {

/// Everything the loop needs: the raw series, its chronological split, and
/// the normalizer fit on the train segment.
struct Dataset {
    RawSeries series;
    ChronoSplit split;
    Normalizer norm;
    int64_t total_len = 0;
};

Dataset prepare_dataset(RawSeries series, const ModelConfig& cfg);

/// Tracks the best validation loss with a patience budget.
class EarlyStopping {
public:
    EarlyStopping(int patience) : patience_(patience) {}

    enum class Action { NewBest, Continue, Stop };

    Action observe(double val_loss) {
        if (val_loss < best_) {
            best_ = val_loss;
            since_best_ = 0;
            return Action::NewBest;
        }
        ++since_best_;
        return since_best_ >= patience_ ? Action::Stop : Action::Continue;
    }

    double best() const { return best_; }

private:
    int patience_;
    int since_best_ = 0;
    double best_ = std::numeric_limits<double>::infinity();
};

struct EpochStats {
    int epoch = 0; // 1-based
    double train_pred = 0, train_align = 0, train_smooth = 0, train_total = 0;
    double val_pred = 0;
    double seconds = 0; // wall clock; kept out of the canonical CSV
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    int best_epoch = 0; // 1-based
    std::string stop_reason; // max-epochs | early-stopping | nan-abort
    int64_t skipped_steps = 0;

    /// Deterministic artifact: config echo, per-epoch loss components,
    /// best epoch and stop reason. No timing data.
    std::string to_csv(const ModelConfig& cfg) const;
    /// Wall-clock per epoch, kept separate so the main report is
    /// byte-reproducible across runs.
    std::string timing_csv() const;
};

/// Full optimization loop: seeded shuffling, batched accumulation,
/// AdaBelief steps, per-epoch validation on the prediction loss, patience
/// early stopping. The model is left holding the best-validation weights.
/// A non-finite loss aborts the run; the best (or initial) weights are
/// restored and stop_reason is "nan-abort".
TrainReport train(Model& model, const Dataset& data, std::ostream* log = nullptr);

struct EvalMetrics {
    double mse = 0;
    double mae = 0;
    int64_t windows = 0;
};

/// Metrics in original units: forecast every window of the segment,
/// inverse-normalize, average squared/absolute errors over all
/// windows, channels, and steps.
EvalMetrics evaluate(const Model& model, const Dataset& data,
                     const SeriesSegment& segment);

/// Same loop with an arbitrary predictor (normalized in, normalized out).
EvalMetrics evaluate_with(const std::function<Tensor(const WindowBatch&)>& predict,
                          const Dataset& data, const SeriesSegment& segment,
                          int input_len, int output_len, int stride);

/// Seasonal-naive reference: repeat the last output_len observed values
/// (cyclically tiled when the horizon exceeds the history). Operates on
/// original units.
EvalMetrics persistence_metrics(const Dataset& data, const SeriesSegment& segment,
                                int input_len, int output_len, int stride);

// ---- ablation harness ----

struct AblationVariant {
    std::string name;
    ModelConfig config;
};

struct AblationResult {
    std::string name;
    std::vector<double> mses, maes; // per seed, successful runs only
    double median_mse = 0, median_mae = 0;
    int failures = 0;
    std::string first_error;
};

/// Fresh data per seed (synthetic sources regenerate; file-backed sources
/// return the same series).
using DataProvider = std::function<RawSeries(uint64_t seed)>;

/// Train every variant for every seed and report per-variant medians.
/// A failing run is recorded and the sweep continues.
std::vector<AblationResult> run_ablation(const std::vector<AblationVariant>& variants,
                                         const std::vector<uint64_t>& seeds,
                                         const DataProvider& provider,
                                         std::ostream* log = nullptr);

std::string ablation_csv(const std::vector<AblationResult>& results);

double median(std::vector<double> values);

} // namespace basecast

#endif // BASECAST_TRAINER_HPP
